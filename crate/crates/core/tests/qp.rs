mod common;

use bayesdd_core::qp::{self, brute_force_reference, project_capped_simplex, QpProblem};
use bayesdd_core::Matrix;
use common::*;
use proptest::prelude::*;
use rand::Rng;

/// Reference projection: bisection on the shift `τ` of `Σ clip(v − τ, 0, u) = 1`.
fn bisection_projection(v: &[f64], u: f64) -> Vec<f64> {
    let mass = |t: f64| v.iter().map(|x| (x - t).clamp(0.0, u)).sum::<f64>();
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.iter().map(|x| (x - t).clamp(0.0, u)).collect()
}

fn random_problem(seed: u64, n: usize) -> QpProblem {
    let mut r = rng(seed);
    let q = random_psd(&mut r, n, 0.0);
    let lin: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
    let cap = if n == 1 || r.random::<bool>() { 1.0 } else { r.random_range(1.0 / n as f64..1.0) };
    QpProblem::new(q, lin, cap).unwrap()
}

/// Bound on `‖∇f‖₂` over the unit box: `2‖Q‖_F + ‖q‖`.
fn lipschitz(problem: &QpProblem) -> f64 {
    2.0 * norm(problem.quadratic.as_slice()) + norm(&problem.linear)
}

#[test]
fn matches_grid_search_on_small_problems() {
    let h = 0.005;
    for seed in 0..60 {
        let n = 1 + (seed as usize % 3);
        let p = random_problem(seed, n);
        let sol = qp::solve(&p, None).unwrap();
        let grid = brute_force_reference(&p, h).unwrap();
        let slack = lipschitz(&p) * 2.0 * h * (n as f64).sqrt();
        assert_feasible(&sol.alpha, p.effective_bound());
        assert!(sol.objective <= grid.objective + slack, "seed {seed}");
        assert!(sol.objective >= grid.objective - slack, "seed {seed}");
        assert!(sol.converged);
    }
}

#[test]
fn accepted_iterates_never_increase_the_objective() {
    for seed in 0..20 {
        let mut r = rng(100 + seed);
        let n = 25;
        let q = random_psd(&mut r, n, 0.01);
        let lin: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let p = QpProblem::new(q, lin, 0.2).unwrap();
        let start = random_feasible(&mut r, n, 0.2);
        let mut trace = vec![p.objective(&start)];
        qp::solve_observed(&p, Some(&start), |_, f| trace.push(f)).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn solution_is_deterministic() {
    let p = random_problem(7, 3);
    let a = qp::solve(&p, None).unwrap();
    let b = qp::solve(&p, None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn strictly_convex_problem_has_one_answer_from_any_start() {
    let mut r = rng(3);
    let n = 12;
    let q = random_psd(&mut r, n, 0.5);
    let lin: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let p = QpProblem::new(q, lin, 0.3).unwrap();
    let reference = qp::solve(&p, None).unwrap().alpha;
    for _ in 0..10 {
        let start = random_feasible(&mut r, n, 0.3);
        let alpha = qp::solve(&p, Some(&start)).unwrap().alpha;
        assert!(max_abs_diff(&alpha, &reference) < 1e-6);
    }
}

#[test]
fn kkt_residual_reported_at_tolerance() {
    let p = random_problem(11, 3);
    let sol = qp::solve(&p, None).unwrap();
    assert!(sol.kkt_residual <= p.tolerance);
}

#[test]
fn one_dimensional_problem_is_trivial() {
    let p = QpProblem::new(Matrix::from_rows(&[[3.0]]).unwrap(), vec![-5.0], 1.0).unwrap();
    let sol = qp::solve(&p, None).unwrap();
    assert_eq!(sol.alpha, vec![1.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_agrees_with_bisection(
        v in prop::collection::vec(-5.0f64..5.0, 1..12),
        frac in 0.0f64..1.0,
    ) {
        let n = v.len() as f64;
        let cap = 1.0 / n + frac * (1.0 - 1.0 / n);
        let p = project_capped_simplex(&v, cap).unwrap();
        let reference = bisection_projection(&v, cap);
        prop_assert!(max_abs_diff(&p, &reference) < 1e-9);
        assert_feasible(&p, cap);
    }

    #[test]
    fn projection_is_idempotent(v in prop::collection::vec(-5.0f64..5.0, 1..12)) {
        let once = project_capped_simplex(&v, 1.0).unwrap();
        let twice = project_capped_simplex(&once, 1.0).unwrap();
        prop_assert!(max_abs_diff(&once, &twice) < 1e-12);
    }

    #[test]
    fn projection_preserves_order(v in prop::collection::vec(-5.0f64..5.0, 2..12)) {
        let p = project_capped_simplex(&v, 1.0).unwrap();
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v[i] > v[j] {
                    prop_assert!(p[i] >= p[j]);
                }
            }
        }
    }
}
