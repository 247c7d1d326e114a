use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::config::ExperimentConfig;
use super::run::{ExperimentResult, SweepEntry};
use crate::analytic::solve_asymptotic;
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 8] = [
    "run",
    "k",
    "q_delta",
    "mu_variation",
    "mut_variation",
    "mu_mean_t",
    "mut_mean_t",
    "mse_control",
];

const AGGREGATE_METRICS: [&str; 6] = [
    "q_delta",
    "mu_variation",
    "mut_variation",
    "mu_mean_t",
    "mut_mean_t",
    "mse_control",
];

// Display of f64 is the shortest string that parses back to the same value.
fn num(x: f64) -> String {
    format!("{x}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn keep(k: u64, last: u64, thin: u64) -> bool {
    k == 1 || k == last || k.is_multiple_of(thin)
}

/// Writes the six standard files for `result` into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let thin = result.config.thin;

    let mut w = writer(&dir.join("trace.csv"))?;
    w.write_record(TRACE_HEADER)?;
    for r in &result.runs {
        let last = r.trace.last().map_or(0, |t| t.episode);
        for (rec, mse) in r.trace.iter().zip(&r.mse_control) {
            if !keep(rec.episode, last, thin) {
                continue;
            }
            w.write_record([
                r.run.to_string(),
                rec.episode.to_string(),
                num(rec.q_delta),
                num(rec.mu_variation),
                num(rec.mut_variation),
                num(rec.mu_mean_t),
                num(rec.mut_mean_t),
                num(*mse),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(dir.join("trace.csv"), e))?;

    let mut w = writer(&dir.join("aggregate.csv"))?;
    let mut header = vec!["k".to_string()];
    for m in AGGREGATE_METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    header.push("mse_mu".into());
    header.push("mse_mut".into());
    w.write_record(&header)?;
    let rows = result.aggregate();
    let last = rows.last().map_or(0, |r| r.episode);
    for row in rows.iter().filter(|r| keep(r.episode, last, thin)) {
        let mut rec = vec![row.episode.to_string()];
        for (m, s) in row.metrics {
            rec.push(num(m));
            rec.push(num(s));
        }
        rec.push(num(row.mse_mu));
        rec.push(num(row.mse_mut));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(dir.join("aggregate.csv"), e))?;

    let xs = result.states.points();
    let policy = result.policy();
    let analytic = result.analytic_policy();
    let mut w = writer(&dir.join("policy.csv"))?;
    w.write_record(["x", "learned", "analytic"])?;
    for j in 0..xs.len() {
        w.write_record([num(xs[j]), num(policy[j]), num(analytic[j])])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("policy.csv"), e))?;

    let (mu, mut_) = (result.mu(), result.mut_());
    let mut w = writer(&dir.join("distribution.csv"))?;
    w.write_record(["x", "learned_mu", "learned_mut", "analytic_mu"])?;
    for j in 0..xs.len() {
        w.write_record([num(xs[j]), num(mu[j]), num(mut_[j]), num(result.weight.mass()[j])])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("distribution.csv"), e))?;

    write_json(&dir.join("solution.json"), &result.solution)?;
    write_json(&dir.join("config.json"), &result.config)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Analytic-only outputs: `solution.json`, `config.json`, and `policy.csv` /
/// `distribution.csv` with empty learned columns.
pub fn write_analytic_outputs(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    cfg.validate()?;
    let sol = solve_asymptotic(&cfg.model)?;
    let states = Arc::new(cfg.state_grid.build()?);
    let weight = sol.stationary_density_on_grid(states.clone());
    create_dir(dir)?;

    let mut w = writer(&dir.join("policy.csv"))?;
    w.write_record(["x", "learned", "analytic"])?;
    for x in states.points() {
        w.write_record([num(*x), String::new(), num(sol.optimal_control(*x))])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("policy.csv"), e))?;

    let mut w = writer(&dir.join("distribution.csv"))?;
    w.write_record(["x", "learned_mu", "learned_mut", "analytic_mu"])?;
    for (x, m) in states.points().iter().zip(weight.mass()) {
        w.write_record([num(*x), String::new(), String::new(), num(*m)])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("distribution.csv"), e))?;

    write_json(&dir.join("solution.json"), &sol)?;
    write_json(&dir.join("config.json"), cfg)
}

/// `compare_policy.csv`, `compare_distribution.csv` and `compare_summary.csv`.
pub(crate) fn write_comparison(results: &[ExperimentResult], dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let first = &results[0];
    let xs = first.states.points();
    let names: Vec<String> = results
        .iter()
        .map(|r| r.config.preset.map_or("custom".to_string(), |p| p.name().to_string()))
        .collect();

    let policies: Vec<Vec<f64>> = results.iter().map(|r| r.policy()).collect();
    let analytic = first.analytic_policy();
    let mut w = writer(&dir.join("compare_policy.csv"))?;
    let mut header = vec!["x".to_string(), "analytic".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for j in 0..xs.len() {
        let mut rec = vec![num(xs[j]), num(analytic[j])];
        rec.extend(policies.iter().map(|p| num(p[j])));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(dir.join("compare_policy.csv"), e))?;

    let mus: Vec<Vec<f64>> = results.iter().map(|r| r.mu()).collect();
    let mut w = writer(&dir.join("compare_distribution.csv"))?;
    w.write_record(&header)?;
    for j in 0..xs.len() {
        let mut rec = vec![num(xs[j]), num(first.weight.mass()[j])];
        rec.extend(mus.iter().map(|m| num(m[j])));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(dir.join("compare_distribution.csv"), e))?;

    let mut w = writer(&dir.join("compare_summary.csv"))?;
    w.write_record([
        "regime",
        "omega_mu",
        "omega_mut",
        "learned_mean_mu",
        "learned_mean_mut",
        "analytic_mu_bar",
        "mse_control",
    ])?;
    for (name, r) in names.iter().zip(results) {
        let mean = |m: &[f64]| xs.iter().zip(m).map(|(x, p)| x * p).sum::<f64>();
        let mse = r.aggregate().last().map_or(f64::NAN, |row| row.mse_control());
        w.write_record([
            name.clone(),
            num(r.config.learn.omega_mu),
            num(r.config.learn.omega_mut),
            num(mean(&r.mu())),
            num(mean(&r.mut_())),
            num(r.solution.mu_bar),
            num(mse),
        ])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("compare_summary.csv"), e))
}

/// One row per heuristic with the last-episode aggregate metrics.
pub(crate) fn write_sweep_summary(entries: &[SweepEntry], dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let mut w = writer(&dir.join("sweep_summary.csv"))?;
    w.write_record([
        "heuristic",
        "episodes",
        "final_q_delta",
        "final_mu_variation",
        "final_mut_variation",
        "final_mse_control",
    ])?;
    for e in entries {
        let rows = e.result.aggregate();
        let last = rows.last().expect("at least one episode");
        w.write_record([
            e.heuristic.name().to_string(),
            last.episode.to_string(),
            num(last.q_delta()),
            num(last.mu_variation()),
            num(last.mut_variation()),
            num(last.mse_control()),
        ])?;
    }
    w.flush().map_err(|e| Error::io(dir.join("sweep_summary.csv"), e))
}
