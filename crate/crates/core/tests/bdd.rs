mod common;

use bayesdd_core::bdd::{
    build_map_problem, density_prior_mean, map_closed_form, svdd_like_prior, train_bdd, train_ml, Prior,
};
use bayesdd_core::kernel::gram_matrix;
use bayesdd_core::qp::{self, brute_force_reference, project_capped_simplex};
use bayesdd_core::svdd::svdd_problem;
use bayesdd_core::{KernelSpec, Matrix};
use common::*;
use rand::Rng;

fn gaussian(sigma: f64) -> KernelSpec {
    KernelSpec::gaussian(sigma).unwrap()
}

#[test]
fn two_point_problem_by_hand() {
    let x = Matrix::from_rows(&[[0.0], [2.0]]).unwrap();
    let gram = gram_matrix(&gaussian(1.0), &x).unwrap();
    let e = (-2.0f64).exp();
    let d = 1.0 + e;
    let prior = Prior::identity(density_prior_mean(&gram, 0.5).unwrap()).unwrap();
    assert_eq!(prior.mean, vec![-d.sqrt(), -d.sqrt()]);
    let p = build_map_problem(&gram, &prior, 1.0).unwrap();
    let expected_q = [3.0, 2.0 * e, 2.0 * e, 3.0];
    assert!(max_abs_diff(p.quadratic.as_slice(), &expected_q) < 1e-15);
    let expected_lin = -2.0 * (d - d.sqrt());
    assert!(max_abs_diff(&p.linear, &[expected_lin, expected_lin]) < 1e-15);
}

#[test]
fn three_points_match_grid_search() {
    let x = Matrix::from_rows(&[[0.0, 0.0], [0.4, 0.1], [2.0, -1.0]]).unwrap();
    let kernel = gaussian(1.0);
    let gram = gram_matrix(&kernel, &x).unwrap();
    for model in [train_bdd(&x, 0.5, kernel, None).unwrap(), train_ml(&x, kernel).unwrap()] {
        let prior = match model.method_tag {
            bayesdd_core::MethodTag::Ml => Prior::new(vec![0.0; 3], Matrix::zeros(3, 3)).unwrap(),
            _ => Prior::identity(density_prior_mean(&gram, 0.5).unwrap()).unwrap(),
        };
        let p = build_map_problem(&gram, &prior, 1.0).unwrap();
        let grid = brute_force_reference(&p, 0.005).unwrap();
        assert!(p.objective(&model.alpha) <= grid.objective + 1e-12);
        assert!(max_abs_diff(&model.alpha, &grid.alpha) < 0.02);
    }
}

#[test]
fn unique_minimizer_from_random_starts() {
    let kernel = gaussian(0.8);
    for seed in 0..5 {
        let mut r = rng(40 + seed);
        let x = random_points(&mut r, 20, 2, 2.0);
        let gram = gram_matrix(&kernel, &x).unwrap();
        let prior = Prior::identity(density_prior_mean(&gram, 0.5).unwrap()).unwrap();
        let p = build_map_problem(&gram, &prior, 1.0).unwrap();
        let reference = qp::solve(&p, None).unwrap().alpha;
        for _ in 0..10 {
            let start = random_feasible(&mut r, 20, 1.0);
            let alpha = qp::solve(&p, Some(&start)).unwrap().alpha;
            assert!(max_abs_diff(&alpha, &reference) < 1e-6);
        }
    }
}

#[test]
fn strong_prior_pulls_towards_projected_mean() {
    let kernel = gaussian(1.0);
    let mut r = rng(9);
    let x = random_points(&mut r, 12, 2, 2.0);
    let gram = gram_matrix(&kernel, &x).unwrap();
    let mean = density_prior_mean(&gram, 0.5).unwrap();
    let target = project_capped_simplex(&mean, 1.0).unwrap();
    let mut last = f64::INFINITY;
    for t in [1e2, 1e4, 1e6] {
        let prior = Prior::new(mean.clone(), Matrix::identity(12).scaled(t)).unwrap();
        let p = build_map_problem(&gram, &prior, 1.0).unwrap();
        let alpha = qp::solve(&p, None).unwrap().alpha;
        let dist: f64 = norm(&alpha.iter().zip(&target).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(dist < last, "t={t}: {dist} !< {last}");
        last = dist;
    }
    assert!(last < 1e-4);
}

#[test]
fn zero_precision_matches_maximum_likelihood() {
    let kernel = gaussian(1.0);
    for seed in 0..10 {
        let mut r = rng(60 + seed);
        let n = r.random_range(2..25);
        let x = random_points(&mut r, n, 2, 2.0);
        let bdd = train_bdd(&x, 0.5, kernel, Some(Matrix::zeros(n, n))).unwrap();
        let ml = train_ml(&x, kernel).unwrap();
        assert!(max_abs_diff(&bdd.alpha, &ml.alpha) < 1e-6);
    }
}

#[test]
fn support_count_falls_as_exponent_grows() {
    let mut r = rng(77);
    let core = random_points(&mut r, 60, 2, 0.5);
    let mut fringe = Vec::new();
    for _ in 0..15 {
        let a: f64 = r.random_range(0.0..std::f64::consts::TAU);
        let rad: f64 = r.random_range(2.0..3.0);
        fringe.push([rad * a.cos(), rad * a.sin()]);
    }
    let x = core.vstack(&Matrix::from_rows(&fringe).unwrap()).unwrap();
    let counts: Vec<usize> = [0.1, 0.5, 0.9]
        .iter()
        .map(|&nu| train_bdd(&x, nu, gaussian(1.0), None).unwrap().support_indices.len())
        .collect();
    let violations = counts.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(violations <= 1, "{counts:?}");
}

#[test]
fn svdd_like_prior_approaches_svdd_with_replication() {
    let kernel = gaussian(1.0);
    let mut r = rng(12);
    let base = random_points(&mut r, 8, 2, 1.5);
    for n in [8usize, 32, 128] {
        let idx: Vec<usize> = (0..n).map(|i| if n == 8 { i } else { r.random_range(0..8) }).collect();
        let x = base.select_rows(&idx);
        let gram = gram_matrix(&kernel, &x).unwrap();
        let prior = svdd_like_prior(&gram).unwrap();
        let bdd = qp::solve(&build_map_problem(&gram, &prior, 1.0).unwrap(), None).unwrap().alpha;
        let svdd = qp::solve(&svdd_problem(&gram, 1.0 / n as f64).unwrap(), None).unwrap().alpha;
        let gap = gram.quadratic_form(&bdd) - gram.quadratic_form(&svdd);
        let bound = svdd.iter().map(|a| a * a).sum::<f64>() / n as f64;
        assert!(gap >= -1e-8, "n={n}: gap {gap}");
        assert!(gap <= bound + 1e-8, "n={n}: gap {gap} bound {bound}");
    }
}

#[test]
fn uniform_weights_score_distance_to_centroid() {
    let sigma = 0.9;
    let mut r = rng(4);
    let x = random_points(&mut r, 10, 2, 1.0);
    let z = random_points(&mut r, 6, 2, 2.0);
    let model = train_ml(&x, gaussian(sigma)).unwrap();
    let k = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
        (-d / (2.0 * sigma * sigma)).exp()
    };
    let n = x.rows() as f64;
    let mut centroid = 0.0;
    for a in x.row_iter() {
        for b in x.row_iter() {
            centroid += k(a, b);
        }
    }
    centroid /= n * n;
    let scores = model.score(&z).unwrap();
    for (i, q) in z.row_iter().enumerate() {
        let cross: f64 = x.row_iter().map(|a| k(a, q)).sum::<f64>() / n;
        assert!((scores[i] - (centroid + 1.0 - 2.0 * cross)).abs() < 1e-9);
    }
}

#[test]
fn closed_form_agrees_with_constrained_solution_when_interior() {
    let x = Matrix::from_rows(&[[0.0], [2.0]]).unwrap();
    let kernel = gaussian(1.0);
    let gram = gram_matrix(&kernel, &x).unwrap();
    let prior = Prior::identity(vec![-0.5, -0.5]).unwrap();
    let free = map_closed_form(&gram, &prior).unwrap();
    let scale: f64 = free.iter().sum();
    let alpha = qp::solve(&build_map_problem(&gram, &prior, 1.0).unwrap(), None).unwrap().alpha;
    assert!(max_abs_diff(&alpha, &[0.5, 0.5]) < 1e-9);
    assert!((free[0] - free[1]).abs() < 1e-12 && scale > 0.0);
}

#[test]
fn scores_do_not_depend_on_row_order() {
    let kernel = gaussian(1.0);
    let mut r = rng(31);
    let x = random_points(&mut r, 15, 2, 2.0);
    let z = random_points(&mut r, 10, 2, 3.0);
    let perm: Vec<usize> = (0..15).map(|i| (i * 7) % 15).collect();
    let a = train_bdd(&x, 0.5, kernel, None).unwrap().score(&z).unwrap();
    let b = train_bdd(&x.select_rows(&perm), 0.5, kernel, None).unwrap().score(&z).unwrap();
    assert!(max_abs_diff(&a, &b) < 1e-9);
}
