//! The trained model shared by every learner.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::{cross_kernel, GramMatrix, KernelSpec};
use crate::matrix::Matrix;
use crate::qp::QpSolution;

/// Support vectors are the samples with `α_i > SPARSITY_RATIO · max α`.
pub const SPARSITY_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MethodTag {
    Svdd,
    Bdd,
    Ssdd,
    Ml,
}

impl MethodTag {
    pub const ALL: [MethodTag; 4] = [MethodTag::Svdd, MethodTag::Bdd, MethodTag::Ssdd, MethodTag::Ml];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodTag::Svdd => "svdd",
            MethodTag::Bdd => "bdd",
            MethodTag::Ssdd => "ssdd",
            MethodTag::Ml => "ml",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str().eq_ignore_ascii_case(s))
    }
}

impl core::fmt::Display for MethodTag {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Solver diagnostics carried along with a model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverReport {
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&QpSolution> for SolverReport {
    fn from(s: &QpSolution) -> Self {
        Self {
            objective: s.objective,
            kkt_residual: s.kkt_residual,
            iterations: s.iterations,
            converged: s.converged,
        }
    }
}

/// Graph settings recorded on semi-supervised models.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SemiSupervisedInfo {
    pub unlabeled_count: usize,
    pub graph_k: usize,
    pub graph_bandwidth: f64,
    pub epsilon: f64,
    pub laplacian_precision: bool,
}

/// A trained one-class model. The center `Σ α_i φ(x_i)` is held implicitly
/// through the training points and their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptionModel {
    pub train_points: Matrix,
    pub alpha: Vec<f64>,
    pub kernel: KernelSpec,
    /// Cached `αᵀKα`, the squared norm of the center.
    pub center_norm_sq: f64,
    pub support_indices: Vec<usize>,
    pub method_tag: MethodTag,
    /// Cap on the weights used during training.
    pub upper_bound: f64,
    /// ν as supplied to the learner (absent for ML).
    pub nu: Option<f64>,
    pub solver: Option<SolverReport>,
    pub semi_supervised: Option<SemiSupervisedInfo>,
}

impl DescriptionModel {
    /// Assembles a model from trained weights. `gram` must be the Gram matrix
    /// of `train_points` under `kernel`.
    pub fn new(
        train_points: Matrix,
        alpha: Vec<f64>,
        kernel: KernelSpec,
        gram: &GramMatrix,
        method_tag: MethodTag,
        upper_bound: f64,
    ) -> Result<Self> {
        if alpha.len() != train_points.rows() {
            return Err(Error::DimensionMismatch {
                left: train_points.rows(),
                right: alpha.len(),
            });
        }
        if gram.len() != alpha.len() {
            return Err(Error::DimensionMismatch {
                left: gram.len(),
                right: alpha.len(),
            });
        }
        let center_norm_sq = gram.quadratic_form(&alpha).max(0.0);
        let support_indices = support_indices(&alpha);
        Ok(Self {
            train_points,
            alpha,
            kernel,
            center_norm_sq,
            support_indices,
            method_tag,
            upper_bound,
            nu: None,
            solver: None,
            semi_supervised: None,
        })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.train_points.cols()
    }

    pub fn converged(&self) -> bool {
        self.solver.is_none_or(|s| s.converged)
    }

    /// Squared distance of each row of `queries` to the center:
    /// `αᵀKα + K(z, z) − 2 Σ_j α_j K(x_j, z)`. Smaller is more target-like.
    pub fn score(&self, queries: &Matrix) -> Result<Vec<f64>> {
        if queries.rows() > 0 && queries.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: queries.cols(),
            });
        }
        let active: Vec<usize> = (0..self.len()).filter(|&j| self.alpha[j] != 0.0).collect();
        let points = self.train_points.select_rows(&active);
        let weights: Vec<f64> = active.iter().map(|&j| self.alpha[j]).collect();
        let cross = cross_kernel(&self.kernel, &points, queries)?;
        Ok((0..queries.rows())
            .map(|i| {
                let z = queries.row(i);
                let self_sim = self.kernel.eval(z, z).unwrap_or(f64::NAN);
                let pull: f64 = cross.row(i).iter().zip(&weights).map(|(k, a)| k * a).sum();
                self.center_norm_sq + self_sim - 2.0 * pull
            })
            .collect())
    }
}

pub(crate) fn support_indices(alpha: &[f64]) -> Vec<usize> {
    let max = alpha.iter().copied().fold(0.0f64, f64::max);
    let cutoff = SPARSITY_RATIO * max;
    (0..alpha.len()).filter(|&i| alpha[i] > cutoff).collect()
}
