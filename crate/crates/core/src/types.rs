//! Grids, probability vectors, the Q-table and the model constants.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ mass = 1` for a [`ProbVec`].
pub const MASS_TOLERANCE: f64 = 1e-9;

const SPAN_TOLERANCE: f64 = 1e-9;

/// Uniform 1-D grid `lo, lo + step, ..., hi`. Used for both states and actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lo: f64,
    hi: f64,
    step: f64,
    points: Vec<f64>,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::config("step", format!("must be positive, got {step}")));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::config("hi", format!("must exceed lo ({lo}), got {hi}")));
        }
        let span = (hi - lo) / step;
        let cells = span.round();
        if (span - cells).abs() > SPAN_TOLERANCE {
            return Err(Error::config(
                "step",
                format!("span {lo}..{hi} is not a whole number of steps of {step}"),
            ));
        }
        let n = cells as usize + 1;
        let points = (0..n).map(|i| lo + i as f64 * step).collect();
        Ok(Grid { lo, hi, step, points })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false: a grid has at least two points.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// Index of the nearest grid point. Out-of-range values clamp to the
    /// boundary; exact midpoints go to the upper neighbour.
    pub fn snap(&self, x: f64) -> usize {
        let t = ((x - self.lo) / self.step + 0.5).floor();
        if t.is_nan() || t <= 0.0 {
            0
        } else {
            (t as usize).min(self.points.len() - 1)
        }
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            lo: self.lo,
            hi: self.hi,
            step: self.step,
        }
    }
}

/// Serializable description of a [`Grid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.lo, self.hi, self.step)
    }
}

/// Probability mass function on the points of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec {
    grid: Arc<Grid>,
    mass: Vec<f64>,
}

impl ProbVec {
    pub fn uniform(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        ProbVec {
            mass: vec![1.0 / n as f64; n],
            grid,
        }
    }

    pub fn point_mass(grid: Arc<Grid>, index: usize) -> Self {
        assert!(index < grid.len(), "index {index} outside grid of {} points", grid.len());
        let mut mass = vec![0.0; grid.len()];
        mass[index] = 1.0;
        ProbVec { grid, mass }
    }

    /// Wraps `mass`, rejecting negative entries, a length mismatch or a
    /// total that is not one.
    pub fn from_mass(grid: Arc<Grid>, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != grid.len() {
            return Err(Error::config(
                "mass",
                format!("{} entries for a grid of {} points", mass.len(), grid.len()),
            ));
        }
        if let Some(bad) = mass.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(Error::config("mass", format!("entry {bad} is not a probability")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::config("mass", format!("entries sum to {total}")));
        }
        Ok(ProbVec { grid, mass })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub(crate) fn mass_mut(&mut self) -> &mut [f64] {
        &mut self.mass
    }

    pub fn mean(&self) -> f64 {
        self.mass
            .iter()
            .zip(self.grid.points())
            .map(|(m, x)| m * x)
            .sum()
    }

    pub fn is_valid(&self) -> bool {
        self.mass.iter().all(|m| *m >= 0.0)
            && (self.mass.iter().sum::<f64>() - 1.0).abs() <= MASS_TOLERANCE
    }

    pub fn same_grid(&self, other: &ProbVec) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }
}

/// Tabular state-action costs with per-cell visit counters.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
    pub(crate) visits: Vec<u64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        assert!(n_states > 0 && n_actions > 0, "empty Q-table");
        QTable {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
            visits: vec![0; n_states * n_actions],
        }
    }

    /// Builds a table from row-major values with zero visit counts.
    pub fn from_values(n_states: usize, n_actions: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n_states * n_actions, "value count does not match shape");
        QTable {
            n_states,
            n_actions,
            values,
            visits: vec![0; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_states, self.n_actions)
    }

    pub fn row(&self, state: usize) -> &[f64] {
        let start = state * self.n_actions;
        &self.values[start..start + self.n_actions]
    }

    pub fn value(&self, state: usize, action: usize) -> f64 {
        self.values[self.cell(state, action)]
    }

    pub fn visits(&self, state: usize, action: usize) -> u64 {
        self.visits[self.cell(state, action)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn visit_counts(&self) -> &[u64] {
        &self.visits
    }

    pub fn row_min(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Lowest-index minimiser of a row.
    pub fn row_argmin(&self, state: usize) -> usize {
        argmin(self.row(state))
    }

    pub(crate) fn cell(&self, state: usize, action: usize) -> usize {
        assert!(
            state < self.n_states && action < self.n_actions,
            "cell ({state}, {action}) outside {}x{} table",
            self.n_states,
            self.n_actions
        );
        state * self.n_actions + action
    }

    pub(crate) fn set(&mut self, cell: usize, value: f64) {
        self.values[cell] = value;
        self.visits[cell] += 1;
    }

    pub(crate) fn visits_at(&self, cell: usize) -> u64 {
        self.visits[cell]
    }

    pub(crate) fn value_at(&self, cell: usize) -> f64 {
        self.values[cell]
    }
}

/// Lowest index of the smallest entry.
pub fn argmin(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v < row[best] {
            best = i;
        }
    }
    best
}

/// Constants of the reserve dynamics and the quadratic running cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Intra-bank mean-reversion rate.
    pub kappa: f64,
    pub sigma: f64,
    /// Continuous-time discount rate.
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub ct1: f64,
    pub ct2: f64,
    pub ct3: f64,
    /// Target level of the local mean.
    pub ct: f64,
}

impl ModelParams {
    pub fn baseline() -> Self {
        ModelParams {
            kappa: 1.0,
            sigma: 2.0,
            beta: 1.0,
            c1: 1.5,
            c2: 0.75,
            ct1: 2.5,
            ct2: 0.5,
            ct3: 4.0,
            ct: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("kappa", self.kappa),
            ("sigma", self.sigma),
            ("beta", self.beta),
            ("c1", self.c1),
            ("c2", self.c2),
            ("ct1", self.ct1),
            ("ct2", self.ct2),
            ("ct3", self.ct3),
            ("ct", self.ct),
        ];
        if let Some((key, _)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::config(format!("model.{key}"), "must be finite"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::config("model.sigma", "must be positive"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::config("model.beta", "must be positive"));
        }
        if self.kappa < 0.0 {
            return Err(Error::config("model.kappa", "must be non-negative"));
        }
        if !(self.c1 + self.ct1 > 0.0) {
            return Err(Error::config("model.c1", "c1 + ct1 must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_grid() -> Arc<Grid> {
        Arc::new(Grid::new(-1.5, 4.5, 0.25).unwrap())
    }

    #[test]
    fn grid_point_counts() {
        assert_eq!(Grid::new(-1.5, 4.5, 0.25).unwrap().len(), 25);
        assert_eq!(Grid::new(-6.0, 6.0, 0.25).unwrap().len(), 49);
        assert_eq!(Grid::new(0.0, 1.0, 1.0).unwrap().points(), &[0.0, 1.0]);
    }

    #[test]
    fn grid_last_point_is_hi() {
        let g = Grid::new(-1.5, 4.5, 0.1).unwrap();
        assert_eq!(g.len(), 61);
        assert!((g.points()[60] - 4.5).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_spans() {
        assert!(matches!(Grid::new(0.0, 1.0, 0.3), Err(Error::Config { .. })));
        assert!(matches!(Grid::new(0.0, 1.0, 0.0), Err(Error::Config { .. })));
        assert!(matches!(Grid::new(0.0, 1.0, -0.5), Err(Error::Config { .. })));
        assert!(matches!(Grid::new(1.0, 1.0, 0.5), Err(Error::Config { .. })));
    }

    #[test]
    fn snap_nearest_and_clamped() {
        let g = state_grid();
        assert_eq!(g.point(g.snap(1.93)), 2.0);
        assert_eq!(g.snap(-100.0), 0);
        assert_eq!(g.snap(100.0), 24);
        assert_eq!(g.point(g.snap(1.875)), 2.0);
        assert_eq!(g.point(g.snap(0.125)), 0.25);
        assert_eq!(g.snap(f64::NAN), 0);
    }

    #[test]
    fn snap_is_idempotent_on_points() {
        let g = Grid::new(-6.0, 6.0, 0.25).unwrap();
        for (i, x) in g.points().iter().enumerate() {
            assert_eq!(g.snap(*x), i);
        }
    }

    #[test]
    fn means() {
        let g = state_grid();
        let p = ProbVec::point_mass(g.clone(), g.snap(2.0));
        assert_eq!(p.mean(), 2.0);
        assert!((ProbVec::uniform(g).mean() - 1.5).abs() < 1e-12);
        let two = Arc::new(Grid::new(0.0, 1.0, 1.0).unwrap());
        assert_eq!(ProbVec::uniform(two).mean(), 0.5);
    }

    #[test]
    fn mean_is_linear() {
        let g = state_grid();
        let a = ProbVec::point_mass(g.clone(), 3);
        let b = ProbVec::uniform(g.clone());
        let w = 0.3;
        let mix: Vec<f64> = a
            .mass()
            .iter()
            .zip(b.mass())
            .map(|(x, y)| w * x + (1.0 - w) * y)
            .collect();
        let mix = ProbVec::from_mass(g, mix).unwrap();
        assert!((mix.mean() - (w * a.mean() + (1.0 - w) * b.mean())).abs() < 1e-12);
    }

    #[test]
    fn from_mass_validates() {
        let g = Arc::new(Grid::new(0.0, 1.0, 1.0).unwrap());
        assert!(ProbVec::from_mass(g.clone(), vec![0.5, 0.5]).is_ok());
        assert!(ProbVec::from_mass(g.clone(), vec![0.6, 0.5]).is_err());
        assert!(ProbVec::from_mass(g.clone(), vec![1.5, -0.5]).is_err());
        assert!(ProbVec::from_mass(g, vec![1.0]).is_err());
    }

    #[test]
    fn qtable_argmin_ties_lowest() {
        let q = QTable::from_values(1, 4, vec![2.0, 1.0, 1.0, 3.0]);
        assert_eq!(q.row_argmin(0), 1);
        assert_eq!(q.row_min(0), 1.0);
        assert_eq!(QTable::zeros(2, 3).row_argmin(1), 0);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::baseline().validate().is_ok());
        let mut p = ModelParams::baseline();
        p.sigma = 0.0;
        assert!(p.validate().is_err());
        let mut p = ModelParams::baseline();
        p.c1 = 0.0;
        p.ct1 = 0.0;
        assert!(p.validate().is_err());
        let mut p = ModelParams::baseline();
        p.kappa = -1.0;
        assert!(p.validate().is_err());
    }
}
