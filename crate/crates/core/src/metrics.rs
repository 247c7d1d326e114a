//! Convergence and error measures.

use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticSolution;
use crate::types::{ProbVec, QTable};

/// `Σᵢ |aᵢ − bᵢ|`.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `Σᵢ |p₁(xᵢ) − p₂(xᵢ)|`. No ½ factor, so the range is `[0, 2]`.
pub fn dist_variation(p1: &ProbVec, p2: &ProbVec) -> f64 {
    assert!(p1.same_grid(p2), "distributions live on different grids");
    l1_distance(p1.mass(), p2.mass())
}

/// Entrywise 1,1-norm of `q1 − q2`.
pub fn q_norm_11(q1: &QTable, q2: &QTable) -> f64 {
    assert_eq!(q1.shape(), q2.shape(), "Q-table shape mismatch");
    l1_distance(q1.values(), q2.values())
}

/// `Σⱼ (policy(xⱼ) − α̂(xⱼ))² w(xⱼ)`, with `w` the binned stationary law.
pub fn mse_control(policy: &[f64], sol: &AnalyticSolution, weight: &ProbVec) -> f64 {
    assert_eq!(policy.len(), weight.mass().len(), "policy and weight lengths differ");
    policy
        .iter()
        .zip(weight.grid().points())
        .zip(weight.mass())
        .map(|((a, x), w)| {
            let e = a - sol.optimal_control(*x);
            e * e * w
        })
        .sum()
}

/// Mean squared deviation of per-run means from `target`.
pub fn mse_mean(observed: &[f64], target: f64) -> f64 {
    assert!(!observed.is_empty(), "no observations");
    observed.iter().map(|m| (m - target).powi(2)).sum::<f64>() / observed.len() as f64
}

/// Per-episode mean and population standard deviation across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub runs: usize,
}

pub fn aggregate<T: AsRef<[f64]>>(traces: &[T]) -> RunAggregate {
    assert!(!traces.is_empty(), "no traces to aggregate");
    let len = traces[0].as_ref().len();
    assert!(
        traces.iter().all(|t| t.as_ref().len() == len),
        "traces have different lengths"
    );
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    for i in 0..len {
        // Welford: identical inputs give a mean equal to them and zero spread
        let (mut m, mut s) = (0.0, 0.0);
        for (n, t) in traces.iter().enumerate() {
            let x = t.as_ref()[i];
            let d = x - m;
            m += d / (n + 1) as f64;
            s += d * (x - m);
        }
        mean[i] = m;
        std[i] = (s / traces.len() as f64).max(0.0).sqrt();
    }
    RunAggregate {
        mean,
        std,
        runs: traces.len(),
    }
}

/// Trailing moving average over `window` entries, shorter at the start.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window > 0, "window must be positive");
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for i in 0..series.len() {
        acc += series[i];
        if i >= window {
            acc -= series[i - window];
        }
        out.push(acc / (i + 1).min(window) as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::analytic::solve_asymptotic;
    use crate::types::{Grid, ModelParams};

    fn two() -> Arc<Grid> {
        Arc::new(Grid::new(0.0, 1.0, 1.0).unwrap())
    }

    #[test]
    fn variation_examples() {
        let g = two();
        let a = ProbVec::from_mass(g.clone(), vec![0.75, 0.25]).unwrap();
        let b = ProbVec::uniform(g.clone());
        assert_eq!(dist_variation(&a, &a), 0.0);
        assert_eq!(dist_variation(&a, &b), 0.5);
        let p = ProbVec::point_mass(g.clone(), 0);
        let q = ProbVec::point_mass(g, 1);
        assert_eq!(dist_variation(&p, &q), 2.0);
    }

    #[test]
    #[should_panic(expected = "different grids")]
    fn variation_grid_mismatch() {
        let a = ProbVec::uniform(two());
        let b = ProbVec::uniform(Arc::new(Grid::new(0.0, 2.0, 1.0).unwrap()));
        dist_variation(&a, &b);
    }

    #[test]
    fn q_norm_examples() {
        let a = QTable::zeros(2, 2);
        assert_eq!(q_norm_11(&a, &a), 0.0);
        let b = QTable::from_values(2, 2, vec![0.0, 3.0, 0.0, 0.0]);
        assert_eq!(q_norm_11(&a, &b), 3.0);
        let c = QTable::from_values(2, 2, vec![1.0, -1.0, 2.0, 0.0]);
        assert_eq!(q_norm_11(&c, &a), 4.0);
    }

    #[test]
    #[should_panic(expected = "shape mismatch")]
    fn q_norm_shape_mismatch() {
        q_norm_11(&QTable::zeros(2, 2), &QTable::zeros(2, 3));
    }

    #[test]
    fn mse_control_examples() {
        let sol = solve_asymptotic(&ModelParams::baseline()).unwrap();
        let states = Arc::new(Grid::new(-1.5, 4.5, 0.25).unwrap());
        let actions = Grid::new(-6.0, 6.0, 0.25).unwrap();
        let w = sol.stationary_density_on_grid(states.clone());
        let exact: Vec<f64> = states.points().iter().map(|x| sol.optimal_control(*x)).collect();
        assert_eq!(mse_control(&exact, &sol, &w), 0.0);
        let shifted: Vec<f64> = exact.iter().map(|a| a + 1.0).collect();
        assert!((mse_control(&shifted, &sol, &w) - 1.0).abs() < 1e-12);
        let snapped: Vec<f64> = exact.iter().map(|a| actions.point(actions.snap(*a))).collect();
        assert!(mse_control(&snapped, &sol, &w) <= 0.015625);
    }

    #[test]
    fn mse_control_scales_quadratically() {
        let sol = solve_asymptotic(&ModelParams::baseline()).unwrap();
        let states = Arc::new(Grid::new(-1.5, 4.5, 0.25).unwrap());
        let w = sol.stationary_density_on_grid(states.clone());
        let err: Vec<f64> = (0..25).map(|i| ((i * 7) % 5) as f64 * 0.1 - 0.2).collect();
        let policy = |s: f64| -> Vec<f64> {
            states
                .points()
                .iter()
                .zip(&err)
                .map(|(x, e)| sol.optimal_control(*x) + s * e)
                .collect()
        };
        let base = mse_control(&policy(1.0), &sol, &w);
        assert!((mse_control(&policy(3.0), &sol, &w) - 9.0 * base).abs() < 1e-12);
    }

    #[test]
    fn mse_mean_examples() {
        assert_eq!(mse_mean(&[1.9, 1.9], 1.9), 0.0);
        assert!((mse_mean(&[2.0], 1.9) - 0.01).abs() < 1e-12);
        assert!((mse_mean(&[2.0, 1.8], 1.9) - 0.01).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "no observations")]
    fn mse_mean_empty() {
        mse_mean(&[], 0.0);
    }

    #[test]
    fn aggregate_examples() {
        let single = aggregate(&[vec![1.0, 2.0, 3.0]]);
        assert_eq!(single.mean, vec![1.0, 2.0, 3.0]);
        assert_eq!(single.std, vec![0.0; 3]);
        let pair = aggregate(&[vec![0.0; 4], vec![2.0; 4]]);
        assert_eq!(pair.mean, vec![1.0; 4]);
        assert_eq!(pair.std, vec![1.0; 4]);
        let same = aggregate(&[vec![0.3, 0.7], vec![0.3, 0.7], vec![0.3, 0.7]]);
        assert_eq!(same.std, vec![0.0, 0.0]);
        assert_eq!(same.runs, 3);
    }

    #[test]
    #[should_panic(expected = "different lengths")]
    fn aggregate_length_mismatch() {
        aggregate(&[vec![0.0; 3], vec![0.0; 2]]);
    }

    #[test]
    fn moving_average_window() {
        let ma = moving_average(&[1.0, 2.0, 3.0, 4.0], 2);
        assert_eq!(ma, vec![1.0, 1.5, 2.5, 3.5]);
    }

    fn prob_vec(weights: Vec<f64>) -> ProbVec {
        let g = Arc::new(Grid::new(0.0, 5.0, 1.0).unwrap());
        let total: f64 = weights.iter().sum();
        ProbVec::from_mass(g, weights.into_iter().map(|w| w / total).collect()).unwrap()
    }

    proptest! {
        #[test]
        fn variation_is_a_metric(
            a in proptest::collection::vec(0.01f64..1.0, 6),
            b in proptest::collection::vec(0.01f64..1.0, 6),
            c in proptest::collection::vec(0.01f64..1.0, 6),
        ) {
            let (a, b, c) = (prob_vec(a), prob_vec(b), prob_vec(c));
            let ab = dist_variation(&a, &b);
            prop_assert_eq!(ab, dist_variation(&b, &a));
            prop_assert_eq!(dist_variation(&a, &a), 0.0);
            prop_assert!(ab <= 2.0 + 1e-12);
            prop_assert!(ab <= dist_variation(&a, &c) + dist_variation(&c, &b) + 1e-12);
        }

        #[test]
        fn mse_control_permutation_invariant(seed in 0u64..1000) {
            // permuting (state, policy, weight) triples leaves the sum unchanged
            let sol = solve_asymptotic(&ModelParams::baseline()).unwrap();
            let states = Arc::new(Grid::new(-1.5, 4.5, 0.25).unwrap());
            let w = sol.stationary_density_on_grid(states.clone());
            let policy: Vec<f64> = (0..25).map(|i| ((i as u64 * 31 + seed) % 17) as f64 * 0.25 - 2.0).collect();
            let direct = mse_control(&policy, &sol, &w);
            let mut terms: Vec<f64> = (0..25)
                .map(|j| (policy[j] - sol.optimal_control(states.point(j))).powi(2) * w.mass()[j])
                .collect();
            terms.rotate_left((seed % 25) as usize);
            terms.reverse();
            prop_assert!((terms.iter().sum::<f64>() - direct).abs() < 1e-12);
        }
    }
}
