//! Kernel functions and Gram matrices.
//!
//! The feature map φ is never materialized; everything downstream works on
//! kernel values `K(x, y) = <φ(x), φ(y)>`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{dot, squared_distance, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum KernelFamily {
    /// `exp(-‖x − y‖² / (2σ²))`
    Gaussian,
    /// `x · y`
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// σ; ignored by the linear kernel.
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        let spec = Self {
            family: KernelFamily::Gaussian,
            bandwidth,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn linear() -> Self {
        Self {
            family: KernelFamily::Linear,
            bandwidth: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == KernelFamily::Gaussian && !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "bandwidth",
                reason: "gaussian bandwidth must be positive and finite",
            });
        }
        Ok(())
    }

    /// `K(x, x)` does not depend on `x` for isotropic kernels.
    pub fn is_isotropic(&self) -> bool {
        self.family == KernelFamily::Gaussian
    }

    #[inline]
    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                let s2 = self.bandwidth * self.bandwidth;
                libm::exp(-squared_distance(x, y) / (2.0 * s2))
            }
            KernelFamily::Linear => dot(x, y),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }
}

/// Kernel matrix of a point set together with its weighted degrees
/// (row sums), which several learners use as a local density proxy.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub values: Matrix,
    pub degrees: Vec<f64>,
}

impl GramMatrix {
    /// Wraps precomputed kernel values; degrees are recomputed.
    pub fn from_values(values: Matrix) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::DimensionMismatch {
                left: values.rows(),
                right: values.cols(),
            });
        }
        let degrees = values.row_iter().map(|r| r.iter().sum()).collect();
        Ok(Self { values, degrees })
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.values.diagonal()
    }

    /// `αᵀ K α`.
    pub fn quadratic_form(&self, alpha: &[f64]) -> f64 {
        self.values.quadratic_form(alpha)
    }
}

/// Gram matrix of the rows of `points`. Each unordered pair is evaluated
/// once, so the result is exactly symmetric.
pub fn gram_matrix(spec: &KernelSpec, points: &Matrix) -> Result<GramMatrix> {
    spec.validate()?;
    let n = points.rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut values = Matrix::zeros(n, n);
    for i in 0..n {
        let xi = points.row(i);
        for j in i..n {
            let v = spec.eval_unchecked(xi, points.row(j));
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    GramMatrix::from_values(values)
}

/// `m×n` matrix with entry `[i, j] = K(queries[i], points[j])`.
pub fn cross_kernel(spec: &KernelSpec, points: &Matrix, queries: &Matrix) -> Result<Matrix> {
    spec.validate()?;
    if queries.rows() > 0 && points.rows() > 0 && points.cols() != queries.cols() {
        return Err(Error::DimensionMismatch {
            left: points.cols(),
            right: queries.cols(),
        });
    }
    let mut out = Matrix::zeros(queries.rows(), points.rows());
    for i in 0..queries.rows() {
        let z = queries.row(i);
        for (j, o) in out.row_mut(i).iter_mut().enumerate() {
            *o = spec.eval_unchecked(z, points.row(j));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eval_examples() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        assert_eq!(g.eval(&[3.2, -1.0], &[3.2, -1.0]).unwrap(), 1.0);
        assert!(close(g.eval(&[0.0], &[2.0]).unwrap(), 0.135_335_283_236_612_7, 1e-15));
        assert_eq!(KernelSpec::linear().eval(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
    }

    #[test]
    fn eval_dimension_mismatch_names_both_lengths() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        assert_eq!(
            g.eval(&[1.0, 2.0], &[1.0]),
            Err(Error::DimensionMismatch { left: 2, right: 1 })
        );
    }

    #[test]
    fn nonpositive_bandwidth_rejected() {
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::gaussian(-1.0).is_err());
        assert!(KernelSpec::gaussian(f64::NAN).is_err());
    }

    #[test]
    fn gram_examples() {
        let g = KernelSpec::gaussian(1.0).unwrap();

        let one = gram_matrix(&g, &Matrix::from_rows(&[[0.5, 0.5]]).unwrap()).unwrap();
        assert_eq!(one.values.as_slice(), &[1.0]);
        assert_eq!(one.degrees, vec![1.0]);

        let twins = gram_matrix(&g, &Matrix::from_rows(&[[1.0], [1.0]]).unwrap()).unwrap();
        assert_eq!(twins.values.as_slice(), &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(twins.degrees, vec![2.0, 2.0]);

        let e2 = (-2.0f64).exp();
        let pair = gram_matrix(&g, &Matrix::from_rows(&[[0.0], [2.0]]).unwrap()).unwrap();
        for (got, want) in pair.values.as_slice().iter().zip([1.0, e2, e2, 1.0]) {
            assert!(close(*got, want, 1e-15));
        }
        for d in &pair.degrees {
            assert!(close(*d, 1.0 + e2, 1e-15));
        }
    }

    #[test]
    fn gram_of_empty_set_is_an_error() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        assert_eq!(gram_matrix(&g, &Matrix::zeros(0, 3)), Err(Error::EmptyDataset));
    }

    #[test]
    fn cross_kernel_examples() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        let x = Matrix::from_rows(&[[0.0], [2.0]]).unwrap();

        let mid = cross_kernel(&g, &x, &Matrix::from_rows(&[[1.0]]).unwrap()).unwrap();
        let h = (-0.5f64).exp();
        assert!(close(mid[(0, 0)], h, 1e-15) && close(mid[(0, 1)], h, 1e-15));

        let gram = gram_matrix(&g, &x).unwrap();
        assert_eq!(cross_kernel(&g, &x, &x).unwrap(), gram.values);

        let first = cross_kernel(&g, &x, &x.select_rows(&[0])).unwrap();
        assert_eq!(first.row(0), gram.values.row(0));
    }

    #[test]
    fn cross_kernel_dimension_mismatch() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        let x = Matrix::from_rows(&[[0.0, 1.0]]).unwrap();
        let z = Matrix::from_rows(&[[0.0]]).unwrap();
        assert!(matches!(
            cross_kernel(&g, &x, &z),
            Err(Error::DimensionMismatch { left: 2, right: 1 })
        ));
    }
}
