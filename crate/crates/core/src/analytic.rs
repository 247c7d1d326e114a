//! Closed-form stationary equilibrium of the linear-quadratic control game.
//!
//! The limiting value function is `V(x) = Γ₂x² + Γ₁x + Γ₀`, the equilibrium
//! control is `α̂(x) = −2Γ₂x − Γ₁`, and the controlled reserve is an OU process
//! with reversion rate `κ + 2Γ₂`, so its stationary law is
//! `N(μ̄, σ²/(2κ + 4Γ₂))`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Grid, ModelParams, ProbVec};

/// Relative agreement required between the two routes to `Γ₁`.
pub const GAMMA1_CONSISTENCY: f64 = 1e-6;

const SINGULAR_DENOMINATOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSolution {
    pub gamma2: f64,
    pub gamma1: f64,
    pub gamma0: f64,
    pub mu_bar: f64,
    /// Variance of the stationary Gaussian law.
    pub var: f64,
}

/// Positive root of `2Γ₂² + (β + 2κ)Γ₂ − (c₁ + c̃₁) = 0`.
pub fn gamma2(params: &ModelParams) -> f64 {
    let b = params.beta + 2.0 * params.kappa;
    (-b + (b * b + 8.0 * (params.c1 + params.ct1)).sqrt()) / 4.0
}

/// `Γ₁` from the coefficient-matching quotient, given `Γ₂` and `μ̄`.
pub fn gamma1_quotient(params: &ModelParams, gamma2: f64, mu_bar: f64) -> f64 {
    let p = params;
    let num = 2.0 * p.ct3 * (mu_bar - p.ct)
        - 2.0 * p.ct1 * p.ct2 * (2.0 - p.ct2) * mu_bar
        - 2.0 * p.c1 * p.c2 * mu_bar;
    num / (p.beta + p.kappa + 2.0 * gamma2)
}

pub fn solve_asymptotic(params: &ModelParams) -> Result<AnalyticSolution> {
    params.validate()?;
    let p = params;
    let g2 = gamma2(p);
    let denom = p.c1 * (1.0 - p.c2) + p.ct1 * (1.0 - p.ct2).powi(2) + p.ct3 - p.kappa * g2;
    if denom.abs() < SINGULAR_DENOMINATOR {
        return Err(Error::SingularModel(format!(
            "mean equation denominator is {denom:e}"
        )));
    }
    let mu_bar = p.ct3 * p.ct / denom;

    let g1_fixed_point = -2.0 * g2 * mu_bar;
    let g1 = gamma1_quotient(p, g2, mu_bar);
    let scale = g1.abs().max(g1_fixed_point.abs()).max(f64::MIN_POSITIVE);
    if (g1 - g1_fixed_point).abs() > GAMMA1_CONSISTENCY * scale.max(1.0) {
        return Err(Error::SingularModel(format!(
            "Γ₁ routes disagree: quotient {g1}, fixed point {g1_fixed_point}"
        )));
    }

    let gamma0 = (-p.kappa * mu_bar - 0.5 * g1 * g1
        + p.sigma * p.sigma * g2
        + p.c1 * p.c2 * p.c2 * mu_bar
        + p.ct1 * p.ct2 * p.ct2 * mu_bar
        + p.ct3 * (mu_bar - p.ct).powi(2))
        / p.beta;

    let var = p.sigma * p.sigma / (2.0 * p.kappa + 4.0 * g2);
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::SingularModel(format!("stationary variance is {var}")));
    }

    Ok(AnalyticSolution {
        gamma2: g2,
        gamma1: g1,
        gamma0,
        mu_bar,
        var,
    })
}

impl AnalyticSolution {
    pub fn optimal_control(&self, x: f64) -> f64 {
        -2.0 * self.gamma2 * x - self.gamma1
    }

    pub fn value(&self, x: f64) -> f64 {
        self.gamma2 * x * x + self.gamma1 * x + self.gamma0
    }

    /// Stationary law binned onto `grid`: point `x_j` receives the mass of
    /// `(x_{j−1}, x_j]` with `x_{−1} = −∞`; the right tail beyond the last
    /// point is added to the last bin.
    pub fn stationary_density_on_grid(&self, grid: Arc<Grid>) -> ProbVec {
        let n = grid.len();
        let mut mass = vec![0.0; n];
        if self.var == 0.0 {
            let j = grid
                .points()
                .iter()
                .position(|x| self.mu_bar <= *x)
                .unwrap_or(n - 1);
            mass[j] = 1.0;
        } else {
            let sd = self.var.sqrt();
            let mut prev_cdf = 0.0;
            for (j, x) in grid.points().iter().enumerate() {
                let cdf = if j + 1 == n {
                    1.0
                } else {
                    normal_cdf((x - self.mu_bar) / sd)
                };
                mass[j] = (cdf - prev_cdf).max(0.0);
                prev_cdf = cdf;
            }
        }
        ProbVec::from_mass(grid, mass).expect("binned Gaussian is a probability vector")
    }
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    // 40-digit evaluation of the closed forms at the baseline constants.
    const GAMMA2: f64 = 0.850_781_059_358_212_1;
    const MU_BAR: f64 = 1.928_073_720_487_4;
    const VAR: f64 = 0.740_312_423_743_284_9;

    fn baseline() -> AnalyticSolution {
        solve_asymptotic(&ModelParams::baseline()).unwrap()
    }

    #[test]
    fn baseline_values() {
        let s = baseline();
        assert!((s.gamma2 / GAMMA2 - 1.0).abs() < 1e-12);
        assert!((s.mu_bar / MU_BAR - 1.0).abs() < 1e-12);
        assert!((s.var / VAR - 1.0).abs() < 1e-12);
        assert!((2.0 * s.gamma2 * s.mu_bar + s.gamma1).abs() < 1e-9);
    }

    #[test]
    fn gamma2_solves_its_quadratic() {
        for kappa in [0.0, 0.5, 1.0, 3.0] {
            let p = ModelParams {
                kappa,
                ..ModelParams::baseline()
            };
            let g = gamma2(&p);
            let r = 2.0 * g * g + (p.beta + 2.0 * p.kappa) * g - (p.c1 + p.ct1);
            assert!(r.abs() < 1e-9);
            assert!(g > 0.0);
        }
    }

    #[test]
    fn no_target_penalty_centres_at_zero() {
        let p = ModelParams {
            ct3: 0.0,
            ..ModelParams::baseline()
        };
        let s = solve_asymptotic(&p).unwrap();
        assert_eq!(s.mu_bar, 0.0);
        assert_eq!(s.gamma1, 0.0);
    }

    #[test]
    fn zero_state_penalties_give_zero_gamma2() {
        let p = ModelParams {
            kappa: 0.0,
            c1: 0.0,
            ct1: 0.0,
            ..ModelParams::baseline()
        };
        assert_eq!(gamma2(&p), 0.0);
        assert!(solve_asymptotic(&p).is_err());
    }

    #[test]
    fn singular_denominator_is_reported() {
        // choose ct3 so that c1(1-c2) + ct1(1-ct2)^2 + ct3 - kappa*Γ₂ = 0
        let mut p = ModelParams::baseline();
        let g2 = gamma2(&p);
        p.ct3 = p.kappa * g2 - p.c1 * (1.0 - p.c2) - p.ct1 * (1.0 - p.ct2).powi(2);
        assert!(matches!(solve_asymptotic(&p), Err(Error::SingularModel(_))));
    }

    #[test]
    fn control_values() {
        let s = baseline();
        assert!(s.optimal_control(s.mu_bar).abs() < 1e-12);
        assert!((s.optimal_control(0.0) - 3.2807).abs() < 1e-3);
        assert!((s.optimal_control(s.mu_bar + 1.0) + 1.7016).abs() < 1e-4);
    }

    #[test]
    fn control_stays_in_action_range() {
        let s = baseline();
        let g = Grid::new(-1.5, 4.5, 0.25).unwrap();
        for x in g.points() {
            let a = s.optimal_control(*x);
            assert!((-6.0..=6.0).contains(&a), "α̂({x}) = {a}");
        }
    }

    #[test]
    fn density_symmetric_two_points() {
        // μ̄ on the first point: (−∞, 0] and the folded (0, ∞) are mirror images
        let s = AnalyticSolution {
            mu_bar: 0.0,
            var: 1.0,
            ..baseline()
        };
        let g = Arc::new(Grid::new(0.0, 1.0, 1.0).unwrap());
        let p = s.stationary_density_on_grid(g);
        assert_eq!(p.mass(), &[0.5, 0.5]);
    }

    #[test]
    fn density_degenerate_variance() {
        let g = Arc::new(Grid::new(-1.5, 4.5, 0.25).unwrap());
        let s = AnalyticSolution {
            var: 0.0,
            ..baseline()
        };
        let p = s.stationary_density_on_grid(g.clone());
        // μ̄ ≈ 1.928 lies in (1.75, 2.0]
        assert_eq!(p.mass()[g.snap(2.0)], 1.0);
        let s = AnalyticSolution {
            var: 1e-12,
            ..baseline()
        };
        let p = s.stationary_density_on_grid(g.clone());
        assert!((p.mass()[g.snap(2.0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_on_baseline_grid() {
        let s = baseline();
        let g = Arc::new(Grid::new(-1.5, 4.5, 0.25).unwrap());
        let p = s.stationary_density_on_grid(g);
        assert!(p.is_valid());
        assert!((p.mass().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p.mean() - s.mu_bar).abs() < 0.25);
    }

    #[test]
    fn density_matches_trapezoid_quadrature() {
        // independent bin integration of the Gaussian pdf
        let s = baseline();
        let g = Arc::new(Grid::new(-1.5, 4.5, 0.25).unwrap());
        let p = s.stationary_density_on_grid(g.clone());
        let sd = s.var.sqrt();
        let pdf = |x: f64| {
            (-(x - s.mu_bar).powi(2) / (2.0 * s.var)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
        };
        let integrate = |a: f64, b: f64| {
            let n = 20_000;
            let h = (b - a) / n as f64;
            let mut acc = 0.5 * (pdf(a) + pdf(b));
            for i in 1..n {
                acc += pdf(a + i as f64 * h);
            }
            acc * h
        };
        let far = 12.0 * sd;
        for j in 0..g.len() {
            let lo = if j == 0 { s.mu_bar - far } else { g.point(j - 1) };
            let hi = if j + 1 == g.len() { s.mu_bar + far } else { g.point(j) };
            assert!((p.mass()[j] - integrate(lo, hi)).abs() < 1e-9, "bin {j}");
        }
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_5).abs() < 1e-17);
    }
}
