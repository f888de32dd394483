use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] bayesdd_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: no data rows", path.display())]
    EmptyDataset { path: PathBuf },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("target class `{class}` has {found} samples, at least {needed} required")]
    InsufficientTargets {
        class: String,
        found: usize,
        needed: usize,
    },

    #[error("outlier ratio {ratio} is not achievable; the largest achievable ratio is {max}")]
    UnachievableRatio { ratio: f64, max: f64 },

    #[error("invalid argument `{name}`: {message}")]
    Argument { name: &'static str, message: String },

    #[error("model document: {0}")]
    Model(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Data,
    Solver,
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Error::Config { .. } | Error::Argument { .. } | Error::UnachievableRatio { .. } => Category::Config,
            Error::Core(e) => match e {
                bayesdd_core::Error::InvalidParameter { .. } | bayesdd_core::Error::Infeasible { .. } => {
                    Category::Config
                }
                bayesdd_core::Error::NotPositiveDefinite { .. } => Category::Solver,
                _ => Category::Data,
            },
            _ => Category::Data,
        }
    }
}
