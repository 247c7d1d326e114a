use std::collections::VecDeque;
use std::sync::Arc;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Preset};
use super::output;
use crate::analytic::{solve_asymptotic, AnalyticSolution};
use crate::env::{rng_stream, BankEnv};
use crate::error::{Error, Result};
use crate::exploration::Heuristic;
use crate::learner::{greedy_policy, EpisodeRecord, Trainer};
use crate::metrics::{aggregate, mse_control, mse_mean};
use crate::types::{Grid, ProbVec};

/// Regimes run by [`compare`], in output column order.
pub const COMPARE_PRESETS: [Preset; 3] = [Preset::MfcgBaseline, Preset::MfgDegenerate, Preset::MfcDegenerate];

/// One training run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run: usize,
    pub trace: Vec<EpisodeRecord>,
    /// `MSE_α̂` of the greedy policy after each episode.
    pub mse_control: Vec<f64>,
    /// Greedy policy averaged over the trailing window.
    pub policy: Vec<f64>,
    /// Terminal global estimate averaged over the trailing window.
    pub mu: Vec<f64>,
    /// Terminal local estimate averaged over the trailing window.
    pub mut_: Vec<f64>,
    pub final_policy: Vec<f64>,
    pub final_mu: Vec<f64>,
    pub final_mut: Vec<f64>,
    pub stopped_early: bool,
}

/// Cross-run statistics for one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub episode: u64,
    /// `(mean, std)` of q_delta, mu_variation, mut_variation, mu_mean_t,
    /// mut_mean_t and mse_control, in that order.
    pub metrics: [(f64, f64); 6],
    pub mse_mu: f64,
    pub mse_mut: f64,
}

impl AggregateRow {
    pub fn q_delta(&self) -> f64 {
        self.metrics[0].0
    }
    pub fn mu_variation(&self) -> f64 {
        self.metrics[1].0
    }
    pub fn mut_variation(&self) -> f64 {
        self.metrics[2].0
    }
    pub fn mse_control(&self) -> f64 {
        self.metrics[5].0
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub solution: AnalyticSolution,
    pub states: Arc<Grid>,
    /// Analytic stationary law binned on the state grid.
    pub weight: ProbVec,
    pub runs: Vec<RunOutput>,
}

fn mean_over<F: Fn(&RunOutput) -> &[f64]>(runs: &[RunOutput], f: F) -> Vec<f64> {
    let n = f(&runs[0]).len();
    let mut acc = vec![0.0; n];
    for r in runs {
        for (a, v) in acc.iter_mut().zip(f(r)) {
            *a += v;
        }
    }
    acc.iter().map(|a| a / runs.len() as f64).collect()
}

impl ExperimentResult {
    /// Window-averaged greedy policy, averaged over runs.
    pub fn policy(&self) -> Vec<f64> {
        mean_over(&self.runs, |r| &r.policy)
    }

    pub fn mu(&self) -> Vec<f64> {
        mean_over(&self.runs, |r| &r.mu)
    }

    pub fn mut_(&self) -> Vec<f64> {
        mean_over(&self.runs, |r| &r.mut_)
    }

    pub fn analytic_policy(&self) -> Vec<f64> {
        self.states.points().iter().map(|x| self.solution.optimal_control(*x)).collect()
    }

    /// Episodes completed by every run.
    pub fn common_len(&self) -> usize {
        self.runs.iter().map(|r| r.trace.len()).min().unwrap_or(0)
    }

    /// Per-episode statistics over the episodes every run completed.
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let len = self.common_len();
        let column = |f: fn(&RunOutput, usize) -> f64| -> Vec<Vec<f64>> {
            self.runs.iter().map(|r| (0..len).map(|i| f(r, i)).collect()).collect()
        };
        let cols = [
            aggregate(&column(|r, i| r.trace[i].q_delta)),
            aggregate(&column(|r, i| r.trace[i].mu_variation)),
            aggregate(&column(|r, i| r.trace[i].mut_variation)),
            aggregate(&column(|r, i| r.trace[i].mu_mean_t)),
            aggregate(&column(|r, i| r.trace[i].mut_mean_t)),
            aggregate(&column(|r, i| r.mse_control[i])),
        ];
        let target = self.solution.mu_bar;
        (0..len)
            .map(|i| {
                let mus: Vec<f64> = self.runs.iter().map(|r| r.trace[i].mu_mean_t).collect();
                let muts: Vec<f64> = self.runs.iter().map(|r| r.trace[i].mut_mean_t).collect();
                AggregateRow {
                    episode: self.runs[0].trace[i].episode,
                    metrics: std::array::from_fn(|m| (cols[m].mean[i], cols[m].std[i])),
                    mse_mu: mse_mean(&mus, target),
                    mse_mut: mse_mean(&muts, target),
                }
            })
            .collect()
    }
}

/// Last `cap` per-episode snapshots of (policy, μ_T, μ̃_T).
struct Window {
    cap: usize,
    items: VecDeque<[Vec<f64>; 3]>,
}

impl Window {
    fn push(&mut self, item: [Vec<f64>; 3]) {
        if self.items.len() == self.cap {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    fn mean(&self, slot: usize) -> Vec<f64> {
        let n = self.items[0][slot].len();
        let mut acc = vec![0.0; n];
        for item in &self.items {
            for (a, v) in acc.iter_mut().zip(&item[slot]) {
                *a += v;
            }
        }
        acc.iter().map(|a| a / self.items.len() as f64).collect()
    }
}

fn run_single(cfg: &ExperimentConfig, sol: &AnalyticSolution, weight: &ProbVec, run: usize) -> Result<RunOutput> {
    let states = Arc::new(cfg.state_grid.build()?);
    let actions = Arc::new(cfg.action_grid.build()?);
    let learn = cfg.learn;
    let env = BankEnv::new(
        cfg.model,
        states.clone(),
        learn.dt,
        learn.cost_scale(),
        cfg.drift_mean,
        rng_stream(cfg.base_seed, 2 * run as u64),
    );
    let gamma = learn.discount_mode.factor(cfg.model.beta, learn.dt);
    let trainer = Trainer::new(
        env,
        states,
        actions.clone(),
        learn,
        cfg.exploration,
        gamma,
        rng_stream(cfg.base_seed, 2 * run as u64 + 1),
    )?;

    let mut mse = Vec::with_capacity(learn.episodes as usize);
    let mut window = Window {
        cap: cfg.window() as usize,
        items: VecDeque::new(),
    };
    let state = trainer.run_with(|st, _| {
        let policy = greedy_policy(&st.q, &actions);
        mse.push(mse_control(&policy, sol, weight));
        window.push([
            policy,
            st.terminal_mu().mass().to_vec(),
            st.terminal_mut().mass().to_vec(),
        ]);
    })?;

    Ok(RunOutput {
        run,
        mse_control: mse,
        policy: window.mean(0),
        mu: window.mean(1),
        mut_: window.mean(2),
        final_policy: greedy_policy(&state.q, &actions),
        final_mu: state.terminal_mu().mass().to_vec(),
        final_mut: state.terminal_mut().mass().to_vec(),
        stopped_early: state.stopped_early,
        trace: state.trace,
    })
}

/// Runs every training of `cfg` in memory. Run `i` draws its environment
/// noise from stream `2i` and its exploration from stream `2i + 1` of the
/// generator keyed by `base_seed`, so results do not depend on scheduling.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let solution = solve_asymptotic(&cfg.model)?;
    let states = Arc::new(cfg.state_grid.build()?);
    let weight = solution.stationary_density_on_grid(states.clone());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    let runs = pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|i| {
                run_single(cfg, &solution, &weight, i).map_err(|e| Error::Run {
                    run: i,
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    Ok(ExperimentResult {
        config: cfg.clone(),
        solution,
        states,
        weight,
        runs,
    })
}

/// [`execute`] followed by writing the six output files to `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let result = execute(cfg)?;
    output::write_outputs(&result, &cfg.output_dir)?;
    Ok(result)
}

/// Runs the three regimes with `base`'s settings, each into its own
/// subdirectory, and writes joined comparison tables to `base.output_dir`.
pub fn compare(base: &ExperimentConfig) -> Result<Vec<ExperimentResult>> {
    let mut results = Vec::new();
    for preset in COMPARE_PRESETS {
        let regime = preset.config().learn;
        let mut cfg = base.clone();
        cfg.preset = Some(preset);
        cfg.learn.omega_mu = regime.omega_mu;
        cfg.learn.omega_mut = regime.omega_mut;
        cfg.output_dir = base.output_dir.join(preset.name());
        results.push(run_experiment(&cfg)?);
    }
    output::write_comparison(&results, &base.output_dir)?;
    Ok(results)
}

/// Outcome of one heuristic in [`sweep`].
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub heuristic: Heuristic,
    pub result: ExperimentResult,
}

/// Runs all nine exploration heuristics, each into `base.output_dir/<name>`,
/// and writes `sweep_summary.csv`.
pub fn sweep(base: &ExperimentConfig) -> Result<Vec<SweepEntry>> {
    let mut entries = Vec::new();
    for h in Heuristic::ALL {
        let mut cfg = base.clone();
        cfg.exploration = h.spec(base.learn.episodes);
        cfg.exploration.rate_floor = base.exploration.rate_floor;
        cfg.output_dir = base.output_dir.join(h.name());
        entries.push(SweepEntry {
            heuristic: h,
            result: run_experiment(&cfg)?,
        });
    }
    output::write_sweep_summary(&entries, &base.output_dir)?;
    Ok(entries)
}
