//! Kernel one-class learners.
//!
//! This crate holds the numerical side of the toolkit: kernels and Gram
//! matrices, a solver for convex quadratics over the capped simplex, and
//! three learners that all produce a [`DescriptionModel`]:
//!
//! - [`svdd`]: support vector data description (minimum enclosing ball in
//!   kernel space).
//! - [`bdd`]: Bayesian data description, a MAP estimate of the weights of a
//!   weighted Gaussian in kernel space under a density-driven prior. Also
//!   carries the maximum-likelihood baseline.
//! - [`ssdd`]: the semi-supervised variant, where unlabeled samples refine
//!   the prior mean and optionally the prior precision through a k-nn graph
//!   Laplacian.
//!
//! Every model ranks points by squared distance to a weighted center
//! `Σ α_i φ(x_i)` in the embedded space; smaller is more target-like.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. File formats, evaluation and the command line live in the
//! `bayesdd` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is how parameter checks reject NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bdd;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod matrix;
pub mod model;
pub mod qp;
pub mod ssdd;
pub mod svdd;

pub use error::{Error, Result};
pub use kernel::{GramMatrix, KernelFamily, KernelSpec};
pub use matrix::Matrix;
pub use model::{DescriptionModel, MethodTag};
pub use qp::{QpProblem, QpSolution};
