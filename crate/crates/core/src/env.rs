//! Grid-projected Euler–Maruyama simulator of the controlled reserve dynamics.
//!
//! The learner only sees the [`Environment`] trait: it hands in a state index,
//! an action and the current mean-field estimates, and gets back the next
//! state index and the stage cost. Model constants stay on this side.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::types::{Grid, ModelParams, ProbVec};

/// Random stream used by simulators and explorers.
pub type SimRng = ChaCha8Rng;

/// Independent stream `stream` of the generator keyed by `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// First moments of the global and local distributions at the current step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanField {
    pub global: f64,
    pub local: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: usize,
    pub cost: f64,
}

/// Black-box sampler the learner trains against.
pub trait Environment {
    fn n_states(&self) -> usize;

    /// Draws a starting state index from `dist`.
    fn sample_initial(&mut self, dist: &ProbVec) -> usize;

    /// Advances one step from `state` under `action`.
    fn step(&mut self, state: usize, action: f64, field: MeanField) -> Transition;
}

/// Which estimate stands in for `E[X_t]` in the drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMean {
    #[default]
    Local,
    Global,
}

/// `½a² + c₁(x − c₂μ̄)² + c̃₁(x − c̃₂μ̃̄)² + c̃₃(μ̃̄ − c̃)²`.
pub fn running_cost(params: &ModelParams, x: f64, a: f64, mu_bar: f64, mut_bar: f64) -> f64 {
    let global = x - params.c2 * mu_bar;
    let local = x - params.ct2 * mut_bar;
    let target = mut_bar - params.ct;
    0.5 * a * a
        + params.c1 * global * global
        + params.ct1 * local * local
        + params.ct3 * target * target
}

/// Index drawn with probabilities `dist.mass()`. Zero-mass entries are never returned.
pub fn sample_initial<R: Rng + ?Sized>(dist: &ProbVec, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, m) in dist.mass().iter().enumerate() {
        if *m > 0.0 {
            cum += m;
            last_positive = i;
            if u < cum {
                return i;
            }
        }
    }
    last_positive
}

/// The bank-reserve environment.
#[derive(Debug, Clone)]
pub struct BankEnv {
    params: ModelParams,
    grid: Arc<Grid>,
    dt: f64,
    cost_scale: f64,
    drift_mean: DriftMean,
    rng: SimRng,
}

impl BankEnv {
    /// `cost_scale` multiplies every stage cost (`dt` to approximate the
    /// time integral, `1` for raw costs).
    pub fn new(
        params: ModelParams,
        grid: Arc<Grid>,
        dt: f64,
        cost_scale: f64,
        drift_mean: DriftMean,
        rng: SimRng,
    ) -> Self {
        assert!(dt > 0.0, "time step must be positive");
        BankEnv {
            params,
            grid,
            dt,
            cost_scale,
            drift_mean,
            rng,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Euler–Maruyama update before projection onto the grid.
    pub fn continuous_next(&mut self, state: usize, action: f64, mf_mean: f64) -> f64 {
        let x = self.grid.point(state);
        let xi: f64 = self.rng.sample(StandardNormal);
        let drift = self.params.kappa * (mf_mean - x) + action;
        x + drift * self.dt + self.params.sigma * self.dt.sqrt() * xi
    }

    /// Next state index given the mean that drives mean reversion.
    pub fn next_state(&mut self, state: usize, action: f64, mf_mean: f64) -> usize {
        let x = self.continuous_next(state, action, mf_mean);
        self.grid.snap(x)
    }
}

impl Environment for BankEnv {
    fn n_states(&self) -> usize {
        self.grid.len()
    }

    fn sample_initial(&mut self, dist: &ProbVec) -> usize {
        sample_initial(dist, &mut self.rng)
    }

    fn step(&mut self, state: usize, action: f64, field: MeanField) -> Transition {
        let x = self.grid.point(state);
        let cost = self.cost_scale * running_cost(&self.params, x, action, field.global, field.local);
        let drift_mean = match self.drift_mean {
            DriftMean::Local => field.local,
            DriftMean::Global => field.global,
        };
        let next = self.next_state(state, action, drift_mean);
        Transition { next, cost }
    }
}
