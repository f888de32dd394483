#![allow(dead_code)]

use bayesdd_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize, spread: f64) -> Matrix {
    let data = (0..n * d).map(|_| rng.random_range(-spread..spread)).collect();
    Matrix::from_vec(n, d, data).unwrap()
}

/// `BᵀB + shift·I` with `B` uniform in [-1, 1].
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Matrix {
    let b = random_points(rng, n, n, 1.0);
    let mut q = b.transpose().matmul(&b);
    for i in 0..n {
        q[(i, i)] += shift;
    }
    q
}

/// Uniform draw from the capped simplex by rejection from the plain simplex.
pub fn random_feasible(rng: &mut ChaCha8Rng, n: usize, cap: f64) -> Vec<f64> {
    loop {
        let e: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let s: f64 = e.iter().sum();
        let a: Vec<f64> = e.iter().map(|v| v / s).collect();
        if a.iter().all(|&v| v <= cap) {
            return a;
        }
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn to_nalgebra(m: &Matrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn assert_feasible(alpha: &[f64], cap: f64) {
    let sum: f64 = alpha.iter().sum();
    assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");
    for &a in alpha {
        assert!(a >= -1e-12 && a <= cap + 1e-12, "entry {a} outside [0, {cap}]");
    }
}
