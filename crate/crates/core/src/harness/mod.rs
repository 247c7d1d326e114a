//! Experiment configuration, seeded multi-run orchestration and output files.
//!
//! Output files written by [`run_experiment`] (all CSVs have one header row):
//!
//! | file | columns |
//! |---|---|
//! | `trace.csv` | `run,k,q_delta,mu_variation,mut_variation,mu_mean_t,mut_mean_t,mse_control` |
//! | `aggregate.csv` | `k`, then `<metric>_mean,<metric>_std` for the six trace metrics, then `mse_mu,mse_mut` |
//! | `policy.csv` | `x,learned,analytic` |
//! | `distribution.csv` | `x,learned_mu,learned_mut,analytic_mu` |
//! | `solution.json` | the analytic solution |
//! | `config.json` | the resolved configuration |

mod config;
mod output;
mod run;

pub use config::{load_config, parse_config, ExperimentConfig, Overrides, Preset, DEFAULT_AVERAGE_WINDOW};
pub use output::{write_analytic_outputs, write_outputs};
pub use run::{
    compare, execute, run_experiment, sweep, AggregateRow, ExperimentResult, RunOutput,
    SweepEntry, COMPARE_PRESETS,
};
