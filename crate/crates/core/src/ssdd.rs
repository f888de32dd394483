//! Semi-supervised data description.
//!
//! Unlabeled samples never enter the QP. They refine the prior:
//!
//! - the mean uses weighted degrees over labeled and unlabeled samples,
//!   `m_i = −(Σ_{j ∈ L∪U} K_ij)^ν`;
//! - optionally, the precision is the labeled block of the inverse of a
//!   regularized k-nn graph Laplacian, `C⁻¹ = ((L + εI)⁻¹)_{1..n,1..n}`.
//!
//! Labeled samples always occupy the first `n` indices of the combined
//! ordering.

use alloc::vec::Vec;

use crate::bdd::{check_exponent, fit_map, prior_mean_from_degrees, Prior};
use crate::error::{Error, Result};
use crate::kernel::{cross_kernel, gram_matrix, GramMatrix, KernelSpec};
use crate::linalg::{solve_spd_linear, Cholesky};
use crate::matrix::{squared_distance, Matrix};
use crate::model::{DescriptionModel, MethodTag, SemiSupervisedInfo};

pub const DEFAULT_GRAPH_K: usize = 7;
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Symmetrized k-nn graph with Gaussian edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub weights: Matrix,
    pub k: usize,
    pub bandwidth: f64,
}

impl NeighborGraph {
    pub fn len(&self) -> usize {
        self.weights.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianPrecision {
    pub matrix: Matrix,
    pub regularization: f64,
}

/// Connects every sample to its `k` nearest neighbors (ties go to the lower
/// index) and symmetrizes: an edge exists if either endpoint selected the
/// other. Edge weight is `exp(−‖x_i − x_j‖² / (2·bandwidth²))`.
pub fn knn_graph(points: &Matrix, k: usize, bandwidth: f64) -> Result<NeighborGraph> {
    let n = points.rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if k >= n {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "neighbor count must be smaller than the number of samples",
        });
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "bandwidth",
            reason: "graph bandwidth must be positive and finite",
        });
    }

    let mut dist = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = squared_distance(points.row(i), points.row(j));
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }

    let mut adjacent = alloc::vec![false; n * n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
        for &j in order.iter().take(k) {
            adjacent[i * n + j] = true;
            adjacent[j * n + i] = true;
        }
    }

    let two_b2 = 2.0 * bandwidth * bandwidth;
    let mut weights = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if adjacent[i * n + j] {
                let w = libm::exp(-dist[(i, j)] / two_b2);
                weights[(i, j)] = w;
                weights[(j, i)] = w;
            }
        }
    }
    Ok(NeighborGraph { weights, k, bandwidth })
}

/// `L = D − W` with `D_ii = Σ_j W_ij`.
pub fn graph_laplacian(graph: &NeighborGraph) -> Result<Matrix> {
    let w = &graph.weights;
    if !w.is_square() {
        return Err(Error::DimensionMismatch {
            left: w.rows(),
            right: w.cols(),
        });
    }
    if !w.is_finite() || w.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter {
            name: "weights",
            reason: "graph weights must be finite and nonnegative",
        });
    }
    if w.asymmetry() != 0.0 || w.diagonal().iter().any(|&v| v != 0.0) {
        return Err(Error::InvalidParameter {
            name: "weights",
            reason: "graph weights must be symmetric with zero diagonal",
        });
    }
    let n = w.rows();
    let mut l = w.scaled(-1.0);
    for i in 0..n {
        l[(i, i)] = w.row(i).iter().sum();
    }
    Ok(l)
}

/// Labeled block of `(L + εI)⁻¹`.
pub fn laplacian_precision(laplacian: &Matrix, labeled_count: usize, epsilon: f64) -> Result<LaplacianPrecision> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: "regularization must be positive and finite",
        });
    }
    if !laplacian.is_square() {
        return Err(Error::DimensionMismatch {
            left: laplacian.rows(),
            right: laplacian.cols(),
        });
    }
    let total = laplacian.rows();
    if labeled_count == 0 || labeled_count > total {
        return Err(Error::InvalidParameter {
            name: "labeled_count",
            reason: "must lie between 1 and the graph size",
        });
    }
    let mut shifted = laplacian.clone();
    for i in 0..total {
        shifted[(i, i)] += epsilon;
    }
    // Only the first n columns of the inverse are needed.
    let mut rhs = Matrix::zeros(total, labeled_count);
    for i in 0..labeled_count {
        rhs[(i, i)] = 1.0;
    }
    let columns = solve_spd_linear(&shifted, &rhs)?;
    let mut matrix = columns.leading_block(labeled_count);
    matrix.symmetrize();
    Cholesky::new(&matrix)?;
    Ok(LaplacianPrecision {
        matrix,
        regularization: epsilon,
    })
}

/// `m_i = −(Σ_{j ∈ L∪U} K_ij)^ν` for the first `labeled_count` rows of a
/// Gram matrix over labeled-then-unlabeled samples.
pub fn semi_prior_mean(gram_full: &GramMatrix, labeled_count: usize, nu: f64) -> Result<Vec<f64>> {
    if labeled_count > gram_full.len() {
        return Err(Error::DimensionMismatch {
            left: gram_full.len(),
            right: labeled_count,
        });
    }
    prior_mean_from_degrees(&gram_full.degrees[..labeled_count], nu)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsddOptions {
    pub nu: f64,
    pub graph_k: usize,
    /// Defaults to the kernel bandwidth when absent.
    pub graph_bandwidth: Option<f64>,
    pub epsilon: f64,
    pub use_laplacian_precision: bool,
    pub upper_bound: f64,
}

impl SsddOptions {
    pub fn new(nu: f64) -> Self {
        Self {
            nu,
            graph_k: DEFAULT_GRAPH_K,
            graph_bandwidth: None,
            epsilon: DEFAULT_EPSILON,
            use_laplacian_precision: false,
            upper_bound: 1.0,
        }
    }
}

/// Trains on `labeled` with `unlabeled` shaping the prior. The returned
/// model stores only the labeled points, so the QP has dimension
/// `labeled.rows()` whatever the unlabeled count.
///
/// A `graph_k` at or above the combined sample count is lowered to
/// `n + u − 1`; the value used is recorded on the model.
pub fn train_ssdd(
    labeled: &Matrix,
    unlabeled: &Matrix,
    kernel: KernelSpec,
    options: &SsddOptions,
) -> Result<DescriptionModel> {
    check_exponent(options.nu)?;
    let n = labeled.rows();
    let u = unlabeled.rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if u > 0 && unlabeled.cols() != labeled.cols() {
        return Err(Error::DimensionMismatch {
            left: labeled.cols(),
            right: unlabeled.cols(),
        });
    }

    let gram = gram_matrix(&kernel, labeled)?;
    let all = labeled.vstack(unlabeled)?;
    let degrees: Vec<f64> = if u == 0 {
        gram.degrees.clone()
    } else {
        let cross = cross_kernel(&kernel, &all, labeled)?;
        cross.row_iter().map(|r| r.iter().sum()).collect()
    };
    let mean = prior_mean_from_degrees(&degrees, options.nu)?;

    let graph_bandwidth = options.graph_bandwidth.unwrap_or(kernel.bandwidth);
    let total = n + u;
    let graph_k = options.graph_k.min(total.saturating_sub(1));
    let prior = if options.use_laplacian_precision {
        let graph = knn_graph(&all, graph_k, graph_bandwidth)?;
        let laplacian = graph_laplacian(&graph)?;
        let precision = laplacian_precision(&laplacian, n, options.epsilon)?;
        Prior::new(mean, precision.matrix)?
    } else {
        Prior::identity(mean)?
    };

    let mut model = fit_map(labeled, &gram, &prior, kernel, options.upper_bound, MethodTag::Ssdd)?;
    model.nu = Some(options.nu);
    model.semi_supervised = Some(SemiSupervisedInfo {
        unlabeled_count: u,
        graph_k,
        graph_bandwidth,
        epsilon: options.epsilon,
        laplacian_precision: options.use_laplacian_precision,
    });
    Ok(model)
}
