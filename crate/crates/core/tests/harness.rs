use std::fs;
use std::path::Path;

use mfcg::harness::{self, write_analytic_outputs, ExperimentConfig, Preset};
use mfcg::solve_asymptotic;

fn small(dir: &Path, runs: usize, episodes: u64, steps: usize) -> ExperimentConfig {
    let mut cfg = Preset::MfcgBaseline.config();
    cfg.runs = runs;
    cfg.set_episodes(episodes);
    cfg.learn.horizon_steps = steps;
    cfg.output_dir = dir.to_path_buf();
    cfg.workers = 2;
    cfg
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn writes_the_six_files_with_fixed_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), 1, 10, 4);
    harness::run_experiment(&cfg).unwrap();

    let (h, rows) = read_csv(&dir.path().join("trace.csv"));
    assert_eq!(
        h,
        ["run", "k", "q_delta", "mu_variation", "mut_variation", "mu_mean_t", "mut_mean_t", "mse_control"]
    );
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.len() == h.len()));
    let ks: Vec<u64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(ks, (1..=10).collect::<Vec<_>>());

    let (h, rows) = read_csv(&dir.path().join("aggregate.csv"));
    assert_eq!(h.len(), 15);
    assert_eq!(h[0], "k");
    assert_eq!(h[13..], ["mse_mu", "mse_mut"]);
    assert_eq!(rows.len(), 10);
    // a single run has zero spread
    for r in &rows {
        for j in (2..13).step_by(2) {
            assert_eq!(r[j].parse::<f64>().unwrap(), 0.0);
        }
    }

    let (h, rows) = read_csv(&dir.path().join("policy.csv"));
    assert_eq!(h, ["x", "learned", "analytic"]);
    assert_eq!(rows.len(), 25);
    let (h, rows) = read_csv(&dir.path().join("distribution.csv"));
    assert_eq!(h, ["x", "learned_mu", "learned_mut", "analytic_mu"]);
    let total: f64 = rows.iter().map(|r| r[3].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);

    let sol: mfcg::AnalyticSolution =
        serde_json::from_str(&fs::read_to_string(dir.path().join("solution.json")).unwrap()).unwrap();
    assert_eq!(sol, solve_asymptotic(&cfg.model).unwrap());
    let back: ExperimentConfig =
        serde_json::from_str(&fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn analytic_column_passes_the_oracle_through() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), 10, 3, 8);
    let result = harness::run_experiment(&cfg).unwrap();
    let sol = solve_asymptotic(&cfg.model).unwrap();
    let (_, rows) = read_csv(&dir.path().join("policy.csv"));
    for r in rows {
        let x: f64 = r[0].parse().unwrap();
        let a: f64 = r[2].parse().unwrap();
        assert!((a - sol.optimal_control(x)).abs() < 1e-9);
    }
    assert_eq!(result.runs.len(), 10);
}

#[test]
fn floats_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), 2, 6, 5);
    let result = harness::run_experiment(&cfg).unwrap();
    let (_, rows) = read_csv(&dir.path().join("trace.csv"));
    let run1: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == "1").collect();
    for (row, rec) in run1.iter().zip(&result.runs[1].trace) {
        assert_eq!(row[2].parse::<f64>().unwrap().to_bits(), rec.q_delta.to_bits());
        assert_eq!(row[5].parse::<f64>().unwrap().to_bits(), rec.mu_mean_t.to_bits());
    }
}

#[test]
fn identical_configs_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    harness::run_experiment(&small(a.path(), 3, 20, 16)).unwrap();
    harness::run_experiment(&small(b.path(), 3, 20, 16)).unwrap();
    for f in ["trace.csv", "aggregate.csv", "policy.csv", "distribution.csv", "solution.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn worker_count_does_not_change_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), 4, 15, 12);
    cfg.workers = 1;
    let seq = harness::execute(&cfg).unwrap();
    cfg.workers = 4;
    let par = harness::execute(&cfg).unwrap();
    for (s, p) in seq.runs.iter().zip(&par.runs) {
        assert_eq!(s.trace, p.trace);
        assert_eq!(s.policy, p.policy);
    }
    // distinct streams per run
    assert_ne!(seq.runs[0].trace, seq.runs[1].trace);
}

#[test]
fn run_results_do_not_depend_on_run_count() {
    let dir = tempfile::tempdir().unwrap();
    let two = harness::execute(&small(dir.path(), 2, 10, 8)).unwrap();
    let five = harness::execute(&small(dir.path(), 5, 10, 8)).unwrap();
    assert_eq!(two.runs[1].trace, five.runs[1].trace);
}

#[test]
fn thinning_keeps_first_multiples_and_last() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), 1, 23, 4);
    cfg.thin = 10;
    harness::run_experiment(&cfg).unwrap();
    let (_, rows) = read_csv(&dir.path().join("trace.csv"));
    let ks: Vec<u64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(ks, [1, 10, 20, 23]);
    let (_, rows) = read_csv(&dir.path().join("aggregate.csv"));
    assert_eq!(rows.len(), 4);
}

#[test]
fn window_is_clipped_to_episode_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), 1, 7, 4);
    assert_eq!(cfg.average_window, 5000);
    assert_eq!(cfg.window(), 7);
    let mut one = cfg.clone();
    one.average_window = 1;
    let r = harness::execute(&one).unwrap();
    assert_eq!(r.runs[0].policy, r.runs[0].final_policy);
    assert_eq!(r.runs[0].mu, r.runs[0].final_mu);
}

#[test]
fn break_rule_truncates_aggregate_to_common_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), 2, 400, 2);
    cfg.learn.tol_q = 1e9;
    cfg.learn.tol_mu = 2.0;
    cfg.learn.tol_mut = 2.0;
    let r = harness::run_experiment(&cfg).unwrap();
    assert!(r.runs.iter().all(|run| run.stopped_early && run.trace.len() == 10));
    assert_eq!(r.aggregate().len(), 10);
}

#[test]
fn analytic_only_outputs_leave_learned_columns_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), 1, 1, 1);
    write_analytic_outputs(&cfg, dir.path()).unwrap();
    let (_, rows) = read_csv(&dir.path().join("policy.csv"));
    assert!(rows.iter().all(|r| r[1].is_empty() && !r[2].is_empty()));
    let (_, rows) = read_csv(&dir.path().join("distribution.csv"));
    assert!(rows.iter().all(|r| r[1].is_empty() && r[2].is_empty()));
}

#[test]
fn load_config_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(&path, "preset = \"mfc_degenerate\"\nruns = 4\n\n[learn]\nepisodes = 1234\n").unwrap();
    let cfg = harness::load_config(&path, None).unwrap();
    assert_eq!(cfg.runs, 4);
    assert_eq!(cfg.learn.omega_mu, 0.15);
    assert_eq!(cfg.exploration.total_episodes, 1234);

    fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    assert_eq!(harness::load_config(&path, None).unwrap(), cfg);

    fs::write(&path, "preset = \"mfcg_baseline\"\n[model]\nkapa = 1.0\n").unwrap();
    let e = harness::load_config(&path, None).unwrap_err().to_string();
    assert!(e.contains("kapa") && e.contains("exp.toml"), "{e}");

    fs::write(&path, "runs = [").unwrap();
    assert!(matches!(harness::load_config(&path, None), Err(mfcg::Error::Parse { .. })));
    assert!(matches!(
        harness::load_config(dir.path().join("missing.toml"), None),
        Err(mfcg::Error::Io { .. })
    ));
}

#[test]
fn compare_writes_joined_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), 1, 5, 4);
    let results = harness::compare(&cfg).unwrap();
    assert_eq!(results.len(), 3);
    let (h, rows) = read_csv(&dir.path().join("compare_policy.csv"));
    assert_eq!(h, ["x", "analytic", "mfcg_baseline", "mfg_degenerate", "mfc_degenerate"]);
    assert_eq!(rows.len(), 25);
    let (h, _) = read_csv(&dir.path().join("compare_distribution.csv"));
    assert_eq!(h.len(), 5);
    let (_, rows) = read_csv(&dir.path().join("compare_summary.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][1], "0.75");
    assert_eq!(rows[2][2], "0.15");
    for p in ["mfcg_baseline", "mfg_degenerate", "mfc_degenerate"] {
        assert!(dir.path().join(p).join("trace.csv").exists());
    }
}
