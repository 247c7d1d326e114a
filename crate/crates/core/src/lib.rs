//! Analytic and model-free solvers for the inter/intra-bank borrowing and
//! lending mean field control game.
//!
//! [`analytic`] gives the closed-form stationary equilibrium. [`learner`]
//! recovers it from simulated transitions of [`env::BankEnv`] with
//! three-timescale mean field Q-learning. [`harness`] runs seeded multi-run
//! experiments and writes the CSV/JSON outputs.
//!
//! ```
//! use mfcg::{solve_asymptotic, ModelParams};
//!
//! let sol = solve_asymptotic(&ModelParams::baseline()).unwrap();
//! assert!((sol.mu_bar - 1.928).abs() < 1e-3);
//! assert!(sol.optimal_control(sol.mu_bar).abs() < 1e-12);
//! ```
//!
//! A short training run:
//!
//! ```
//! use mfcg::harness::{execute, Preset};
//!
//! let mut cfg = Preset::MfcgBaseline.config();
//! cfg.runs = 2;
//! cfg.set_episodes(20);
//! let result = execute(&cfg).unwrap();
//! assert_eq!(result.runs[0].trace.len(), 20);
//! assert_eq!(result.policy().len(), 25);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod env;
pub mod error;
pub mod exploration;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod types;

pub use analytic::{solve_asymptotic, AnalyticSolution};
pub use env::{BankEnv, DriftMean, Environment, MeanField, Transition};
pub use error::{Error, Result};
pub use exploration::{ExplorationSpec, ExplorerKind, Heuristic, Schedule};
pub use harness::{execute, load_config, run_experiment, ExperimentConfig, ExperimentResult, Preset};
pub use learner::{EpisodeRecord, LearnConfig, LearnerState, Trainer};
pub use types::{Grid, GridSpec, ModelParams, ProbVec, QTable};
