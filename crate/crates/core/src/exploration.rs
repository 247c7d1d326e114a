//! Undirected action-exploration rules and their per-episode schedules.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::argmin;

/// Default lower bound on exponentially decaying rates.
pub const DEFAULT_RATE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplorerKind {
    EpsGreedy,
    Boltzmann,
    MaxBoltzmann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Constant,
    Linear,
    Exponential,
}

/// Exploration rule plus the schedule of its decaying parameter.
///
/// The schedule acts on `ε` for [`ExplorerKind::EpsGreedy`] and on `τ` for the
/// two Boltzmann kinds; the other parameter stays at its initial value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationSpec {
    pub kind: ExplorerKind,
    pub schedule: Schedule,
    pub eps0: f64,
    pub tau0: f64,
    /// Base of the exponential schedule.
    pub decay: f64,
    /// Episode count `K` of linear schedules.
    pub total_episodes: u64,
    /// Floor under exponentially decaying rates; zero disables it.
    #[serde(default = "default_rate_floor")]
    pub rate_floor: f64,
}

fn default_rate_floor() -> f64 {
    DEFAULT_RATE_FLOOR
}

/// The nine heuristics compared in the exploration sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    EpsCon,
    EpsLin,
    EpsExp,
    BoltzCon,
    BoltzLin,
    BoltzExp,
    MbCon,
    MbLin,
    MbExp,
}

impl Heuristic {
    pub const ALL: [Heuristic; 9] = [
        Heuristic::EpsCon,
        Heuristic::EpsLin,
        Heuristic::EpsExp,
        Heuristic::BoltzCon,
        Heuristic::BoltzLin,
        Heuristic::BoltzExp,
        Heuristic::MbCon,
        Heuristic::MbLin,
        Heuristic::MbExp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::EpsCon => "eps_con",
            Heuristic::EpsLin => "eps_lin",
            Heuristic::EpsExp => "eps_exp",
            Heuristic::BoltzCon => "boltz_con",
            Heuristic::BoltzLin => "boltz_lin",
            Heuristic::BoltzExp => "boltz_exp",
            Heuristic::MbCon => "mb_con",
            Heuristic::MbLin => "mb_lin",
            Heuristic::MbExp => "mb_exp",
        }
    }

    pub fn spec(self, total_episodes: u64) -> ExplorationSpec {
        use ExplorerKind::*;
        use Schedule::*;
        let (kind, schedule, eps0, decay) = match self {
            Heuristic::EpsCon => (EpsGreedy, Constant, 0.01, 1.0),
            Heuristic::EpsLin => (EpsGreedy, Linear, 0.05, 1.0),
            Heuristic::EpsExp => (EpsGreedy, Exponential, 1.0, 0.9995),
            Heuristic::BoltzCon => (Boltzmann, Constant, 0.0, 1.0),
            Heuristic::BoltzLin => (Boltzmann, Linear, 0.0, 1.0),
            Heuristic::BoltzExp => (Boltzmann, Exponential, 0.0, 0.9999),
            Heuristic::MbCon => (MaxBoltzmann, Constant, 0.05, 1.0),
            Heuristic::MbLin => (MaxBoltzmann, Linear, 0.05, 1.0),
            Heuristic::MbExp => (MaxBoltzmann, Exponential, 0.05, 0.9999),
        };
        ExplorationSpec {
            kind,
            schedule,
            eps0,
            tau0: 5.0,
            decay,
            total_episodes,
            rate_floor: DEFAULT_RATE_FLOOR,
        }
    }
}

impl ExplorationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eps0) {
            return Err(Error::config("exploration.eps0", "must lie in [0, 1]"));
        }
        if !(self.tau0 > 0.0) || !self.tau0.is_finite() {
            return Err(Error::config("exploration.tau0", "must be positive"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::config("exploration.decay", "must lie in (0, 1]"));
        }
        if self.total_episodes == 0 {
            return Err(Error::config("exploration.total_episodes", "must be at least 1"));
        }
        if !(self.rate_floor >= 0.0) {
            return Err(Error::config("exploration.rate_floor", "must be non-negative"));
        }
        Ok(())
    }

    /// `(ε, τ)` for zero-based episode `k`.
    pub fn rate_at(&self, k: u64) -> (f64, f64) {
        let factor = match self.schedule {
            Schedule::Constant => 1.0,
            Schedule::Linear => {
                let total = self.total_episodes as f64;
                (total - k as f64) / total
            }
            Schedule::Exponential => self.decay.powf(k as f64),
        };
        let floored = |v: f64| match self.schedule {
            Schedule::Exponential => v.max(self.rate_floor),
            _ => v,
        };
        match self.kind {
            ExplorerKind::EpsGreedy => (floored(self.eps0 * factor), self.tau0),
            ExplorerKind::Boltzmann | ExplorerKind::MaxBoltzmann => {
                (self.eps0, floored(self.tau0 * factor))
            }
        }
    }
}

/// Picks an action index from a row of Q-costs.
pub fn select_action<R: Rng + ?Sized>(
    q_row: &[f64],
    eps: f64,
    tau: f64,
    kind: ExplorerKind,
    rng: &mut R,
) -> Result<usize> {
    assert!(!q_row.is_empty(), "empty Q row");
    match kind {
        ExplorerKind::EpsGreedy => {
            if rng.random::<f64>() < eps {
                Ok(rng.random_range(0..q_row.len()))
            } else {
                Ok(argmin(q_row))
            }
        }
        ExplorerKind::Boltzmann => boltzmann_sample(q_row, tau, rng),
        ExplorerKind::MaxBoltzmann => {
            check_temperature(tau)?;
            if rng.random::<f64>() < eps {
                boltzmann_sample(q_row, tau, rng)
            } else {
                Ok(argmin(q_row))
            }
        }
    }
}

fn check_temperature(tau: f64) -> Result<()> {
    if tau > 0.0 {
        Ok(())
    } else {
        Err(Error::config("exploration.tau", format!("temperature must be positive, got {tau}")))
    }
}

/// Probabilities `∝ exp(−q/τ)`, shifted by the row minimum.
pub fn boltzmann_probabilities(q_row: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_temperature(tau)?;
    let min = q_row.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = q_row.iter().map(|q| (-(q - min) / tau).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

fn boltzmann_sample<R: Rng + ?Sized>(q_row: &[f64], tau: f64, rng: &mut R) -> Result<usize> {
    check_temperature(tau)?;
    let min = q_row.iter().copied().fold(f64::INFINITY, f64::min);
    let weight = |q: f64| (-(q - min) / tau).exp();
    let total: f64 = q_row.iter().map(|q| weight(*q)).sum();
    let u = rng.random::<f64>() * total;
    let mut cum = 0.0;
    for (i, q) in q_row.iter().enumerate() {
        cum += weight(*q);
        if u < cum {
            return Ok(i);
        }
    }
    Ok(argmin(q_row))
}
