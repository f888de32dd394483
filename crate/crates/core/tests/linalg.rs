mod common;

use bayesdd_core::kernel::gram_matrix;
use bayesdd_core::linalg::{largest_eigenvalue, solve_spd_linear, Cholesky};
use bayesdd_core::KernelSpec;
use common::*;
use rand::Rng;

#[test]
fn spd_solve_matches_reference() {
    for seed in 0..30 {
        let mut r = rng(seed);
        let n = r.random_range(1..30);
        let a = random_psd(&mut r, n, 0.1);
        let b = random_points(&mut r, n, 3, 1.0);
        let x = solve_spd_linear(&a, &b).unwrap();
        let residual = a.matmul(&x).add(&b.scaled(-1.0)).max_abs();
        assert!(residual <= 1e-9 * a.max_abs().max(1.0), "seed {seed}: {residual}");
        let reference = to_nalgebra(&a).lu().solve(&to_nalgebra(&b)).unwrap();
        assert!(max_abs_diff(x.as_slice(), reference.transpose().as_slice()) < 1e-6);
    }
}

#[test]
fn cholesky_factor_reconstructs_input() {
    let mut r = rng(1);
    let a = random_psd(&mut r, 10, 0.5);
    let l = Cholesky::new(&a).unwrap();
    let rebuilt = l.lower().matmul(&l.lower().transpose());
    assert!(rebuilt.add(&a.scaled(-1.0)).max_abs() < 1e-12 * a.max_abs());
}

#[test]
fn gaussian_gram_is_positive_semidefinite() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let x = random_points(&mut r, 40, 3, 2.0);
        let g = gram_matrix(&KernelSpec::gaussian(r.random_range(0.1..3.0)).unwrap(), &x).unwrap();
        let eig = to_nalgebra(&g.values).symmetric_eigenvalues();
        assert!(eig.min() >= -1e-10);
        let top = largest_eigenvalue(&g.values);
        assert!(top >= eig.max() * (1.0 - 1e-9));
    }
}
