//! Command-line front end: `solve`, `train`, `compare` and `sweep`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analytic::solve_asymptotic;
use crate::error::Result;
use crate::harness::{self, ExperimentConfig, Overrides, Preset};

#[derive(Debug, Parser)]
#[command(name = "mfcg", version, about = "Analytic and Q-learning solvers for the bank reserve mean field control game")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the closed-form stationary equilibrium.
    Solve(Common),
    /// Run a multi-seed training experiment.
    Train(Common),
    /// Run the three-timescale, MFG and MFC regimes side by side.
    Compare(Common),
    /// Run all nine exploration heuristics.
    Sweep(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset used for every field the config leaves out.
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    episodes: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Write every N-th episode to the traces.
    #[arg(long)]
    thin: Option<u64>,
}

impl Common {
    fn resolve(&self, fallback: Preset) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => harness::load_config(path, self.preset)?,
            None => self.preset.unwrap_or(fallback).config(),
        };
        Overrides {
            runs: self.runs,
            episodes: self.episodes,
            seed: self.seed,
            output_dir: self.out.clone(),
            workers: self.workers,
            thin: self.thin,
        }
        .apply(&mut cfg)?;
        Ok(cfg)
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Solve(c) => {
            let cfg = c.resolve(Preset::MfcgBaseline)?;
            let sol = solve_asymptotic(&cfg.model)?;
            let _ = writeln!(out, "gamma2 = {}", sol.gamma2);
            let _ = writeln!(out, "gamma1 = {}", sol.gamma1);
            let _ = writeln!(out, "gamma0 = {}", sol.gamma0);
            let _ = writeln!(out, "mu_bar = {}", sol.mu_bar);
            let _ = writeln!(out, "var = {}", sol.var);
            if c.out.is_some() {
                harness::write_analytic_outputs(&cfg, &cfg.output_dir)?;
            }
        }
        Command::Train(c) => {
            let cfg = c.resolve(Preset::MfcgBaseline)?;
            let result = harness::run_experiment(&cfg)?;
            let last = result.aggregate().last().copied();
            let _ = writeln!(out, "wrote {}", cfg.output_dir.display());
            if let Some(row) = last {
                let _ = writeln!(out, "episode {}: mse_control = {}", row.episode, row.mse_control());
            }
        }
        Command::Compare(c) => {
            let cfg = c.resolve(Preset::MfcgBaseline)?;
            harness::compare(&cfg)?;
            let _ = writeln!(out, "wrote {}", cfg.output_dir.display());
        }
        Command::Sweep(c) => {
            let cfg = c.resolve(Preset::ExplorationSweep)?;
            for e in harness::sweep(&cfg)? {
                let mse = e.result.aggregate().last().map_or(f64::NAN, |r| r.mse_control());
                let _ = writeln!(out, "{}: final mse_control = {mse}", e.heuristic.name());
            }
        }
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 1 on a failed command, 2 on bad usage.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
