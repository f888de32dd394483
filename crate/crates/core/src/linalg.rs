//! Dense symmetric positive-definite solves.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Matrix,
}

impl Cholesky {
    /// Factorizes a symmetric matrix; only the lower triangle is read.
    pub fn new(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                left: a.rows(),
                right: a.cols(),
            });
        }
        if !a.is_finite() {
            return Err(Error::NonFinite { what: "matrix" });
        }
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let d = libm::sqrt(d);
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let l = &self.lower;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[(i, k)] * b[k];
            }
            b[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * b[k];
            }
            b[i] = s / l[(i, i)];
        }
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        if b.rows() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: b.rows(),
            });
        }
        let mut out = Matrix::zeros(b.rows(), b.cols());
        let mut col = vec![0.0; b.rows()];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(i, j)];
            }
            self.solve_in_place(&mut col);
            for (i, c) in col.iter().enumerate() {
                out[(i, j)] = *c;
            }
        }
        Ok(out)
    }
}

/// Solves `A X = B` for symmetric positive-definite `A`.
pub fn solve_spd_linear(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Cholesky::new(a)?.solve(b)
}

/// Largest eigenvalue of a symmetric matrix by power iteration, started
/// from a fixed non-symmetric vector so the result is deterministic.
///
/// The estimate is inflated slightly so it can be used as a Lipschitz bound.
pub fn largest_eigenvalue(a: &Matrix) -> f64 {
    let n = a.rows();
    if n == 0 {
        return 0.0;
    }
    // Gershgorin bound caps the estimate and covers non-convergence.
    let gershgorin = a
        .row_iter()
        .map(|r| r.iter().map(|v| libm::fabs(*v)).sum::<f64>())
        .fold(0.0f64, f64::max);
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 + 1.0).recip()).collect();
    let norm = |v: &[f64]| libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = a.mul_vec(&v);
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let next: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        v = w.into_iter().map(|x| x / nw).collect();
        if libm::fabs(next - lambda) <= 1e-10 * libm::fabs(next) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Power iteration approaches λ_max from below.
    (lambda * 1.01 + 1e-12).min(gershgorin).max(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve_returns_rhs() {
        let b = Matrix::from_rows(&[[1.0, -2.0], [3.5, 0.0], [7.0, 1.0]]).unwrap();
        assert_eq!(solve_spd_linear(&Matrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn diagonal_solve() {
        let a = Matrix::from_diagonal(&[2.0, 4.0]);
        let x = solve_spd_linear(&a, &Matrix::column(&[2.0, 4.0])).unwrap();
        for v in x.as_slice() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn indefinite_matrix_names_failing_pivot() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        match Cholesky::new(&a) {
            Err(Error::NotPositiveDefinite { pivot, value }) => {
                assert_eq!(pivot, 1);
                assert_eq!(value, -3.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn power_iteration_bounds_top_eigenvalue() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let l = largest_eigenvalue(&a);
        assert!((3.0..=3.0 * 1.011).contains(&l), "{l}");
        assert_eq!(largest_eigenvalue(&Matrix::zeros(3, 3)), 0.0);
    }
}
