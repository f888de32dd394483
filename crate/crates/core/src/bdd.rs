//! Bayesian data description.
//!
//! Training samples are modeled as `φ(x) ~ N(Σ_i α_i φ(x_i), I)` with `α` on
//! the simplex and a Gaussian prior `α ~ N(m, C)`. The MAP estimate solves
//!
//! ```text
//! minimize  αᵀ(nK + C⁻¹)α − 2αᵀ(D1 + C⁻¹m)
//! ```
//!
//! where `D1` holds the weighted degrees (row sums of `K`). The default prior
//! uses `C = I` and `m_i = −(D1)_i^ν`, which pushes weight away from samples
//! in dense regions and towards the boundary. Dropping the prior
//! (`C⁻¹ = 0`) gives the maximum-likelihood estimate, whose minimizer is the
//! uniform weighting.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, GramMatrix, KernelSpec};
use crate::linalg::solve_spd_linear;
use crate::matrix::Matrix;
use crate::model::{DescriptionModel, MethodTag, SolverReport};
use crate::qp::{self, QpProblem};

/// Gaussian prior over the weight vector, stored by its precision `C⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    pub mean: Vec<f64>,
    pub precision: Matrix,
    pub precision_is_identity: bool,
}

impl Prior {
    pub fn identity(mean: Vec<f64>) -> Result<Self> {
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "prior mean" });
        }
        let n = mean.len();
        Ok(Self {
            mean,
            precision: Matrix::identity(n),
            precision_is_identity: true,
        })
    }

    pub fn new(mean: Vec<f64>, mut precision: Matrix) -> Result<Self> {
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "prior mean" });
        }
        if !precision.is_finite() {
            return Err(Error::NonFinite {
                what: "prior precision",
            });
        }
        if !precision.is_square() || precision.rows() != mean.len() {
            return Err(Error::DimensionMismatch {
                left: mean.len(),
                right: precision.rows(),
            });
        }
        let scale = precision.max_abs().max(1.0);
        if precision.asymmetry() > 1e-10 * scale {
            return Err(Error::InvalidParameter {
                name: "precision",
                reason: "prior precision must be symmetric",
            });
        }
        precision.symmetrize();
        let precision_is_identity = precision == Matrix::identity(mean.len());
        Ok(Self {
            mean,
            precision,
            precision_is_identity,
        })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// `C⁻¹ m`
    pub fn weighted_mean(&self) -> Vec<f64> {
        if self.precision_is_identity {
            self.mean.clone()
        } else {
            self.precision.mul_vec(&self.mean)
        }
    }
}

pub(crate) fn check_exponent(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter {
            name: "nu",
            reason: "the prior exponent must satisfy 0 < nu < 1",
        });
    }
    Ok(())
}

/// `m_i = −d_i^ν` for degrees `d`. Fails on the first non-positive degree.
pub fn prior_mean_from_degrees(degrees: &[f64], nu: f64) -> Result<Vec<f64>> {
    check_exponent(nu)?;
    degrees
        .iter()
        .enumerate()
        .map(|(index, &d)| {
            if d > 0.0 && d.is_finite() {
                Ok(-libm::pow(d, nu))
            } else {
                Err(Error::NonPositiveDegree { index, value: d })
            }
        })
        .collect()
}

/// Density-driven prior mean `m_i = −(Σ_j K_ij)^ν`.
pub fn density_prior_mean(gram: &GramMatrix, nu: f64) -> Result<Vec<f64>> {
    prior_mean_from_degrees(&gram.degrees, nu)
}

/// Prior under which the MAP objective reduces to
/// `nαᵀKα + ‖α‖² − 2αᵀdiag(K)`: `C = I`, `m = diag(K) − D1`.
pub fn svdd_like_prior(gram: &GramMatrix) -> Result<Prior> {
    let mean = gram
        .diagonal()
        .iter()
        .zip(&gram.degrees)
        .map(|(k, d)| k - d)
        .collect();
    Prior::identity(mean)
}

/// Assembles `Q = nK + C⁻¹`, `q = −2(D1 + C⁻¹m)`.
pub fn build_map_problem(gram: &GramMatrix, prior: &Prior, upper_bound: f64) -> Result<QpProblem> {
    let n = gram.len();
    if prior.len() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: prior.len(),
        });
    }
    let nf = n as f64;
    let mut quadratic = gram.values.scaled(nf);
    if prior.precision_is_identity {
        for i in 0..n {
            quadratic[(i, i)] += 1.0;
        }
    } else {
        quadratic = quadratic.add(&prior.precision);
    }
    let pulled = prior.weighted_mean();
    let linear = gram
        .degrees
        .iter()
        .zip(&pulled)
        .map(|(d, p)| -2.0 * (d + p))
        .collect();
    QpProblem::new(quadratic, linear, upper_bound)
}

/// Unconstrained stationary point `(nK + C⁻¹)⁻¹(D1 + C⁻¹m)`. Ignores the
/// simplex entirely, so the result need not be nonnegative or sum to one.
pub fn map_closed_form(gram: &GramMatrix, prior: &Prior) -> Result<Vec<f64>> {
    let problem = build_map_problem(gram, prior, 1.0)?;
    let rhs: Vec<f64> = problem.linear.iter().map(|v| -0.5 * v).collect();
    let x = solve_spd_linear(&problem.quadratic, &Matrix::column(&rhs))?;
    Ok(x.as_slice().to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BddOptions {
    /// Exponent of the prior mean, in `(0, 1)`.
    pub nu: f64,
    /// Cap on each weight; 1 leaves only the simplex constraint.
    pub upper_bound: f64,
    /// Prior precision `C⁻¹`; identity when absent.
    pub precision: Option<Matrix>,
}

impl BddOptions {
    pub fn new(nu: f64) -> Self {
        Self {
            nu,
            upper_bound: 1.0,
            precision: None,
        }
    }
}

/// Trains with the default prior: identity precision and density mean.
pub fn train_bdd(points: &Matrix, nu: f64, kernel: KernelSpec, precision: Option<Matrix>) -> Result<DescriptionModel> {
    let options = BddOptions {
        precision,
        ..BddOptions::new(nu)
    };
    train_bdd_with(points, kernel, &options)
}

pub fn train_bdd_with(points: &Matrix, kernel: KernelSpec, options: &BddOptions) -> Result<DescriptionModel> {
    check_exponent(options.nu)?;
    let gram = gram_matrix(&kernel, points)?;
    let mean = density_prior_mean(&gram, options.nu)?;
    let prior = match &options.precision {
        Some(p) => Prior::new(mean, p.clone())?,
        None => Prior::identity(mean)?,
    };
    let mut model = fit_map(points, &gram, &prior, kernel, options.upper_bound, MethodTag::Bdd)?;
    model.nu = Some(options.nu);
    Ok(model)
}

/// Maximum-likelihood weighted Gaussian: the MAP objective without a prior.
pub fn train_ml(points: &Matrix, kernel: KernelSpec) -> Result<DescriptionModel> {
    let gram = gram_matrix(&kernel, points)?;
    let n = gram.len();
    let prior = Prior::new(alloc::vec![0.0; n], Matrix::zeros(n, n))?;
    fit_map(points, &gram, &prior, kernel, 1.0, MethodTag::Ml)
}

/// Solves the MAP problem for a given prior and wraps the result.
pub fn fit_map(
    points: &Matrix,
    gram: &GramMatrix,
    prior: &Prior,
    kernel: KernelSpec,
    upper_bound: f64,
    tag: MethodTag,
) -> Result<DescriptionModel> {
    let problem = build_map_problem(gram, prior, upper_bound)?;
    let solution = qp::solve(&problem, None)?;
    let mut model = DescriptionModel::new(points.clone(), solution.alpha.clone(), kernel, gram, tag, upper_bound)?;
    model.solver = Some(SolverReport::from(&solution));
    Ok(model)
}

/// Same ranking function as every other learner.
pub fn score_bdd(model: &DescriptionModel, queries: &Matrix) -> Result<Vec<f64>> {
    model.score(queries)
}
