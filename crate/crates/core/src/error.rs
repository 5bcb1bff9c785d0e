use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by measure construction, estimation and the check harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("atom budget exceeded: {atoms} atoms requested, budget is {budget} (enable sampling mode)")]
    Capacity { atoms: u128, budget: usize },

    #[error("insufficient scales: {usable} usable samples in window, at least {required} required ({detail})")]
    InsufficientScales {
        usable: usize,
        required: usize,
        detail: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
