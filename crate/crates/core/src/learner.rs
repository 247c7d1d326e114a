//! Three-timescale mean field Q-learning.
//!
//! Each episode draws its start from the terminal global estimate of the
//! previous episode, then for every step `n = 0..=T`:
//!
//! 1. chooses an action from the Q-row of the current state,
//! 2. moves the global and local estimates for step `n` toward the visited
//!    state with rates `ρ^μ_k` and `ρ^μ̃_k`,
//! 3. queries the environment with the two means,
//! 4. applies one Robbins–Monro update to the visited Q-cell.
//!
//! With `ω^μ > ω^Q > ω^μ̃` the global estimate is the slowest recursion and
//! the local one the fastest. Setting `ω^μ = ω^μ̃` collapses the scheme to two
//! timescales.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::env::{Environment, MeanField, SimRng};
use crate::error::{Error, Result};
use crate::exploration::{select_action, ExplorationSpec};
use crate::metrics::{dist_variation, l1_distance};
use crate::types::{Grid, ProbVec, QTable};

/// Consecutive episodes that must meet every tolerance before training stops.
pub const BREAK_PATIENCE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscountMode {
    /// `γ = exp(−β·δt)`.
    #[default]
    ExpBetaDt,
    /// `γ = β`, the per-step factor taken literally.
    Literal,
}

impl DiscountMode {
    pub fn factor(self, beta: f64, dt: f64) -> f64 {
        match self {
            DiscountMode::ExpBetaDt => (-beta * dt).exp(),
            DiscountMode::Literal => beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnConfig {
    pub omega_q: f64,
    pub omega_mu: f64,
    pub omega_mut: f64,
    /// Steps per episode; the loop visits `n = 0..=horizon_steps`.
    pub horizon_steps: usize,
    pub dt: f64,
    pub episodes: u64,
    pub discount_mode: DiscountMode,
    pub stage_cost_scaled_by_dt: bool,
    pub tol_q: f64,
    pub tol_mu: f64,
    pub tol_mut: f64,
    /// Set per run by the harness.
    #[serde(skip)]
    pub seed: u64,
    #[serde(default)]
    pub estimates: EstimateLayout,
}

/// Storage of the distribution estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateLayout {
    /// One estimate per step `n = 0..=T`, each updated once per episode.
    #[default]
    PerStep,
    /// A single estimate per distribution, updated at every step.
    Shared,
}

/// How the three rate exponents relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `ω^μ > ω^Q > ω^μ̃`.
    ThreeTimescale,
    /// `ω^μ = ω^μ̃ > ω^Q`: distributions slower than Q.
    TwoTimescaleSlowDistributions,
    /// `ω^μ = ω^μ̃ < ω^Q`: distributions faster than Q.
    TwoTimescaleFastDistributions,
    Other,
}

impl LearnConfig {
    pub fn baseline() -> Self {
        LearnConfig {
            omega_q: 0.55,
            omega_mu: 0.75,
            omega_mut: 0.15,
            horizon_steps: 320,
            dt: 1.0 / 16.0,
            episodes: 50_000,
            discount_mode: DiscountMode::ExpBetaDt,
            stage_cost_scaled_by_dt: true,
            tol_q: 0.0,
            tol_mu: 0.0,
            tol_mut: 0.0,
            seed: 0,
            estimates: EstimateLayout::PerStep,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (key, w) in [
            ("learn.omega_q", self.omega_q),
            ("learn.omega_mu", self.omega_mu),
            ("learn.omega_mut", self.omega_mut),
        ] {
            if !(w > 0.0 && w < 1.0) {
                return Err(Error::config(key, format!("must lie in (0, 1), got {w}")));
            }
        }
        if !(self.omega_q > 0.5) {
            return Err(Error::config("learn.omega_q", "must lie in (0.5, 1)"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config("learn.dt", "must be positive"));
        }
        if self.episodes == 0 {
            return Err(Error::config("learn.episodes", "must be at least 1"));
        }
        if self.horizon_steps == 0 {
            return Err(Error::config("learn.horizon_steps", "must be at least 1"));
        }
        for (key, t) in [
            ("learn.tol_q", self.tol_q),
            ("learn.tol_mu", self.tol_mu),
            ("learn.tol_mut", self.tol_mut),
        ] {
            if !(t >= 0.0) {
                return Err(Error::config(key, "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        let (mu, q, mut_) = (self.omega_mu, self.omega_q, self.omega_mut);
        if mu > q && q > mut_ {
            Regime::ThreeTimescale
        } else if mu == mut_ && mu > q {
            Regime::TwoTimescaleSlowDistributions
        } else if mu == mut_ && mu < q {
            Regime::TwoTimescaleFastDistributions
        } else {
            Regime::Other
        }
    }

    fn break_rule_enabled(&self) -> bool {
        self.tol_q > 0.0 || self.tol_mu > 0.0 || self.tol_mut > 0.0
    }

    pub fn cost_scale(&self) -> f64 {
        if self.stage_cost_scaled_by_dt {
            self.dt
        } else {
            1.0
        }
    }
}

/// Q-learning step size `1/(1 + visits)^ω`.
pub fn rate_q(visits: u64, omega_q: f64) -> f64 {
    (1.0 + visits as f64).powf(-omega_q)
}

/// Distribution step size `1/(1 + k)^ω`.
pub fn rate_dist(k: u64, omega: f64) -> f64 {
    (1.0 + k as f64).powf(-omega)
}

/// `p ← p + ρ(δ_x − p)`.
pub fn update_distribution(p: &mut ProbVec, x_idx: usize, rho: f64) {
    assert!((0.0..=1.0).contains(&rho), "rate {rho} outside [0, 1]");
    let mass = p.mass_mut();
    assert!(x_idx < mass.len(), "state {x_idx} outside grid");
    let keep = 1.0 - rho;
    for m in mass.iter_mut() {
        *m *= keep;
    }
    mass[x_idx] += rho;
}

/// One Robbins–Monro step on cell `(x, a)` toward `cost + γ min_a' Q(next, a')`.
pub fn update_q(
    q: &mut QTable,
    x_idx: usize,
    a_idx: usize,
    cost: f64,
    next_x_idx: usize,
    gamma: f64,
    omega_q: f64,
) {
    let cell = q.cell(x_idx, a_idx);
    let rho = rate_q(q.visits_at(cell), omega_q);
    let target = cost + gamma * q.row_min(next_x_idx);
    let old = q.value_at(cell);
    q.set(cell, old + rho * (target - old));
}

/// Action-grid value of each row's lowest-index argmin.
pub fn greedy_policy(q: &QTable, actions: &Grid) -> Vec<f64> {
    assert_eq!(q.n_actions(), actions.len(), "action grid does not match Q-table");
    (0..q.n_states())
        .map(|x| actions.point(q.row_argmin(x)))
        .collect()
}

/// Per-episode convergence record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// One-based episode number.
    pub episode: u64,
    /// `‖Qᵏ − Qᵏ⁻¹‖₁,₁`.
    pub q_delta: f64,
    /// `δ(μᵏ_T, μᵏ⁻¹_T)`.
    pub mu_variation: f64,
    /// `δ(μ̃ᵏ_T, μ̃ᵏ⁻¹_T)`.
    pub mut_variation: f64,
    pub mu_mean_t: f64,
    pub mut_mean_t: f64,
}

#[derive(Debug, Clone)]
pub struct LearnerState {
    pub q: QTable,
    /// Global estimates, one per step `n = 0..=T`.
    pub mu: Vec<ProbVec>,
    /// Local estimates, one per step.
    pub mut_: Vec<ProbVec>,
    /// Episodes completed.
    pub episode: u64,
    pub trace: Vec<EpisodeRecord>,
    pub stopped_early: bool,
}

impl LearnerState {
    pub fn terminal_mu(&self) -> &ProbVec {
        self.mu.last().expect("at least one step")
    }

    pub fn terminal_mut(&self) -> &ProbVec {
        self.mut_.last().expect("at least one step")
    }
}

/// Drives the learning loop one episode at a time.
pub struct Trainer<E> {
    env: E,
    actions: Arc<Grid>,
    cfg: LearnConfig,
    explore: ExplorationSpec,
    gamma: f64,
    rng: SimRng,
    state: LearnerState,
    prev_q: Vec<f64>,
    calm_streak: usize,
}

impl<E: Environment> Trainer<E> {
    /// `rng` drives action selection; the environment carries its own stream.
    pub fn new(
        env: E,
        states: Arc<Grid>,
        actions: Arc<Grid>,
        cfg: LearnConfig,
        explore: ExplorationSpec,
        gamma: f64,
        rng: SimRng,
    ) -> Result<Self> {
        cfg.validate()?;
        explore.validate()?;
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::config(
                "learn.discount_mode",
                format!("per-step discount {gamma} must lie in (0, 1)"),
            ));
        }
        if env.n_states() != states.len() {
            return Err(Error::config("state_grid", "environment and learner grids differ"));
        }
        let q = QTable::zeros(states.len(), actions.len());
        let uniform = ProbVec::uniform(states);
        let steps = match cfg.estimates {
            EstimateLayout::PerStep => cfg.horizon_steps + 1,
            EstimateLayout::Shared => 1,
        };
        let prev_q = q.values().to_vec();
        let state = LearnerState {
            q,
            mu: vec![uniform.clone(); steps],
            mut_: vec![uniform; steps],
            episode: 0,
            trace: Vec::with_capacity(cfg.episodes as usize),
            stopped_early: false,
        };
        Ok(Trainer {
            env,
            actions,
            cfg,
            explore,
            gamma,
            rng,
            state,
            prev_q,
            calm_streak: 0,
        })
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn actions(&self) -> &Arc<Grid> {
        &self.actions
    }

    /// True once `episodes` have run or the break rule fired.
    pub fn finished(&self) -> bool {
        self.state.stopped_early || self.state.episode >= self.cfg.episodes
    }

    /// Runs one episode and appends its record to the trace.
    pub fn run_episode(&mut self) -> Result<EpisodeRecord> {
        let k = self.state.episode + 1;
        let (eps, tau) = self.explore.rate_at(k - 1);
        let rho_mu = rate_dist(k, self.cfg.omega_mu);
        let rho_mut = rate_dist(k, self.cfg.omega_mut);

        let st = &mut self.state;
        let prev_mu_t = st.terminal_mu().clone();
        let prev_mut_t = st.terminal_mut().clone();

        let mut x = self.env.sample_initial(&prev_mu_t);
        let shared = self.cfg.estimates == EstimateLayout::Shared;
        for step in 0..=self.cfg.horizon_steps {
            let n = if shared { 0 } else { step };
            let a = select_action(st.q.row(x), eps, tau, self.explore.kind, &mut self.rng)?;
            update_distribution(&mut st.mu[n], x, rho_mu);
            update_distribution(&mut st.mut_[n], x, rho_mut);
            let field = MeanField {
                global: st.mu[n].mean(),
                local: st.mut_[n].mean(),
            };
            let tr = self.env.step(x, self.actions.point(a), field);
            update_q(&mut st.q, x, a, tr.cost, tr.next, self.gamma, self.cfg.omega_q);
            x = tr.next;
        }

        let q_delta = l1_distance(st.q.values(), &self.prev_q);
        self.prev_q.copy_from_slice(st.q.values());
        let record = EpisodeRecord {
            episode: k,
            q_delta,
            mu_variation: dist_variation(st.terminal_mu(), &prev_mu_t),
            mut_variation: dist_variation(st.terminal_mut(), &prev_mut_t),
            mu_mean_t: st.terminal_mu().mean(),
            mut_mean_t: st.terminal_mut().mean(),
        };
        st.episode = k;
        st.trace.push(record);

        if self.cfg.break_rule_enabled() {
            let calm = record.q_delta <= self.cfg.tol_q
                && record.mu_variation <= self.cfg.tol_mu
                && record.mut_variation <= self.cfg.tol_mut;
            self.calm_streak = if calm { self.calm_streak + 1 } else { 0 };
            if self.calm_streak >= BREAK_PATIENCE {
                st.stopped_early = true;
            }
        }
        Ok(record)
    }

    /// Trains to completion, calling `observer` after every episode.
    pub fn run_with<F>(mut self, mut observer: F) -> Result<LearnerState>
    where
        F: FnMut(&LearnerState, &EpisodeRecord),
    {
        while !self.finished() {
            let record = self.run_episode()?;
            observer(&self.state, &record);
        }
        Ok(self.state)
    }

    pub fn run(self) -> Result<LearnerState> {
        self.run_with(|_, _| {})
    }
}

/// Builds a [`Trainer`] and runs it to completion.
pub fn run_training<E: Environment>(
    env: E,
    states: Arc<Grid>,
    actions: Arc<Grid>,
    cfg: LearnConfig,
    explore: ExplorationSpec,
    gamma: f64,
    rng: SimRng,
) -> Result<LearnerState> {
    Trainer::new(env, states, actions, cfg, explore, gamma, rng)?.run()
}
