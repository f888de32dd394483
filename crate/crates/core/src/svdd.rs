//! Support vector data description.
//!
//! Dual problem: minimize `αᵀKα − αᵀdiag(K)` over the capped simplex with
//! cap `1/(nν)`. The trained center is `Σ α_i φ(x_i)` and points are ranked
//! by squared distance to it.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, GramMatrix, KernelSpec};
use crate::matrix::Matrix;
use crate::model::{DescriptionModel, MethodTag, SolverReport};
use crate::qp::{self, QpProblem};

/// Relative margin for deciding that a weight sits at its cap.
const CAP_MARGIN: f64 = 1e-7;

/// The SVDD dual for a precomputed Gram matrix.
pub fn svdd_problem(gram: &GramMatrix, nu: f64) -> Result<QpProblem> {
    check_nu(nu)?;
    let n = gram.len();
    let q: Vec<f64> = gram.diagonal().into_iter().map(|d| -d).collect();
    QpProblem::new(gram.values.clone(), q, upper_bound(n, nu))
}

/// `1/(nν)`, nudged up when rounding would make `u·n` fall just short of 1.
pub fn upper_bound(n: usize, nu: f64) -> f64 {
    let u = 1.0 / (n as f64 * nu);
    if u * (n as f64) < 1.0 {
        u * (1.0 + f64::EPSILON)
    } else {
        u
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "nu",
            reason: "SVDD requires 0 < nu <= 1",
        });
    }
    Ok(())
}

pub fn train_svdd(points: &Matrix, nu: f64, kernel: KernelSpec) -> Result<DescriptionModel> {
    check_nu(nu)?;
    let gram = gram_matrix(&kernel, points)?;
    train_svdd_with_gram(points, &gram, nu, kernel)
}

pub fn train_svdd_with_gram(
    points: &Matrix,
    gram: &GramMatrix,
    nu: f64,
    kernel: KernelSpec,
) -> Result<DescriptionModel> {
    let problem = svdd_problem(gram, nu)?;
    let solution = qp::solve(&problem, None)?;
    let mut model = DescriptionModel::new(
        points.clone(),
        solution.alpha.clone(),
        kernel,
        gram,
        MethodTag::Svdd,
        problem.upper_bound,
    )?;
    model.nu = Some(nu);
    model.solver = Some(SolverReport::from(&solution));
    Ok(model)
}

/// Indices of support vectors strictly between zero and the cap.
pub fn boundary_support_indices(model: &DescriptionModel) -> Vec<usize> {
    let cap = model.upper_bound.min(1.0);
    model
        .support_indices
        .iter()
        .copied()
        .filter(|&i| cap >= 1.0 || model.alpha[i] < cap * (1.0 - CAP_MARGIN))
        .collect()
}

/// Squared radius `R²`: the mean score of the boundary support vectors.
/// `gram` must be the Gram matrix of the model's training points.
pub fn radius_sq(model: &DescriptionModel, gram: &GramMatrix) -> Result<f64> {
    if gram.len() != model.len() {
        return Err(Error::DimensionMismatch {
            left: model.len(),
            right: gram.len(),
        });
    }
    let boundary = boundary_support_indices(model);
    if boundary.is_empty() {
        return Err(Error::NoBoundarySupportVector);
    }
    let scores = training_scores(model, gram);
    Ok(boundary.iter().map(|&i| scores[i]).sum::<f64>() / boundary.len() as f64)
}

/// Scores of the training points themselves, read off the Gram matrix.
pub fn training_scores(model: &DescriptionModel, gram: &GramMatrix) -> Vec<f64> {
    let k_alpha = gram.values.mul_vec(&model.alpha);
    (0..model.len())
        .map(|i| model.center_norm_sq + gram.values[(i, i)] - 2.0 * k_alpha[i])
        .collect()
}
