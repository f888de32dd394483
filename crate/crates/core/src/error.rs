use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: left operand has length {left}, right operand has length {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("capped simplex is empty: upper bound {upper_bound} times dimension {n} is below 1")]
    Infeasible { upper_bound: f64, n: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("matrix is not positive definite: Cholesky pivot {pivot} is {value}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("weighted degree of sample {index} is {value}; the prior mean needs strictly positive degrees")]
    NonPositiveDegree { index: usize, value: f64 },

    #[error("no unbounded support vector; use the maximum score over support vectors instead")]
    NoBoundarySupportVector,

    #[error("problem of dimension {n} is too large for exhaustive search (at most {max})")]
    TooLarge { n: usize, max: usize },
}
