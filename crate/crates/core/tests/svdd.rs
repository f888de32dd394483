mod common;

use bayesdd_core::kernel::gram_matrix;
use bayesdd_core::svdd::{boundary_support_indices, radius_sq, train_svdd, training_scores};
use bayesdd_core::{KernelSpec, Matrix};
use common::*;

#[test]
fn boundary_support_vectors_are_equidistant() {
    let kernel = KernelSpec::gaussian(1.0).unwrap();
    for seed in 0..50 {
        let mut r = rng(seed);
        let x = random_points(&mut r, 30, 2, 2.0);
        let model = train_svdd(&x, 0.2, kernel).unwrap();
        let gram = gram_matrix(&kernel, &x).unwrap();
        let scores = training_scores(&model, &gram);
        let boundary: Vec<f64> = boundary_support_indices(&model).iter().map(|&i| scores[i]).collect();
        assert!(!boundary.is_empty(), "seed {seed}");
        let lo = boundary.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = boundary.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo <= 1e-6, "seed {seed}: spread {}", hi - lo);
    }
}

#[test]
fn points_outside_the_sphere_sit_at_the_cap() {
    let kernel = KernelSpec::gaussian(0.7).unwrap();
    let mut r = rng(5);
    let x = random_points(&mut r, 40, 2, 2.0);
    let model = train_svdd(&x, 0.3, kernel).unwrap();
    let gram = gram_matrix(&kernel, &x).unwrap();
    let r2 = radius_sq(&model, &gram).unwrap();
    let scores = training_scores(&model, &gram);
    for (i, s) in scores.iter().enumerate() {
        if *s > r2 + 1e-6 {
            assert!((model.alpha[i] - model.upper_bound).abs() < 1e-6, "index {i}");
        }
        if *s < r2 - 1e-6 {
            assert!(model.alpha[i] < 1e-6, "index {i}");
        }
    }
}

#[test]
fn permuting_rows_permutes_weights() {
    let kernel = KernelSpec::gaussian(1.0).unwrap();
    let mut r = rng(21);
    let x = random_points(&mut r, 20, 2, 2.0);
    let test = random_points(&mut r, 15, 2, 3.0);
    let perm: Vec<usize> = (0..20).rev().collect();
    let a = train_svdd(&x, 0.3, kernel).unwrap();
    let b = train_svdd(&x.select_rows(&perm), 0.3, kernel).unwrap();
    for (j, &i) in perm.iter().enumerate() {
        assert!((a.alpha[i] - b.alpha[j]).abs() < 1e-7);
    }
    let sa = a.score(&test).unwrap();
    let sb = b.score(&test).unwrap();
    assert!(max_abs_diff(&sa, &sb) < 1e-9);
}

#[test]
fn duplicating_the_data_keeps_the_ranking() {
    let kernel = KernelSpec::gaussian(1.0).unwrap();
    let mut r = rng(8);
    let x = random_points(&mut r, 20, 2, 2.0);
    let test = random_points(&mut r, 30, 2, 3.0);
    let a = train_svdd(&x, 0.25, kernel).unwrap();
    let b = train_svdd(&x.vstack(&x).unwrap(), 0.25, kernel).unwrap();
    let sa = a.score(&test).unwrap();
    let sb = b.score(&test).unwrap();
    assert!(max_abs_diff(&sa, &sb) < 1e-6);
    for i in 0..sa.len() {
        for j in 0..sa.len() {
            if sa[i] + 1e-5 < sa[j] {
                assert!(sb[i] < sb[j]);
            }
        }
    }
}

#[test]
fn scores_are_squared_distances() {
    let kernel = KernelSpec::gaussian(0.5).unwrap();
    let mut r = rng(2);
    let x = random_points(&mut r, 25, 3, 1.0);
    let test = random_points(&mut r, 50, 3, 4.0);
    let model = train_svdd(&x, 0.1, kernel).unwrap();
    let max_alpha = model.alpha.iter().cloned().fold(0.0, f64::max);
    let upper = model.center_norm_sq + 1.0 + 2.0 * model.len() as f64 * max_alpha;
    for s in model.score(&test).unwrap() {
        assert!(s >= -1e-9 && s <= upper);
    }
}

#[test]
fn two_point_radius() {
    let kernel = KernelSpec::gaussian(1.0).unwrap();
    let x = Matrix::from_rows(&[[0.0], [2.0]]).unwrap();
    let model = train_svdd(&x, 0.5, kernel).unwrap();
    let gram = gram_matrix(&kernel, &x).unwrap();
    let e = (-2.0f64).exp();
    let center = 0.25 * (2.0 + 2.0 * e);
    let expected = center + 1.0 - 2.0 * (0.5 + 0.5 * e);
    assert!((radius_sq(&model, &gram).unwrap() - expected).abs() < 1e-9);
}

#[test]
fn midpoint_beats_the_mirror_point() {
    let kernel = KernelSpec::gaussian(1.0).unwrap();
    let x = Matrix::from_rows(&[[0.0], [2.0]]).unwrap();
    let model = train_svdd(&x, 0.5, kernel).unwrap();
    let s = model.score(&Matrix::from_rows(&[[1.0], [-2.0], [4.0]]).unwrap()).unwrap();
    assert!(s[0] < s[1] && s[0] < s[2]);
}
