use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range arguments.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The operation is undefined on the given cells (e.g. inverting a cell at 0).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("scale mismatch: {left} vs {right}")]
    ScaleMismatch { left: u32, right: u32 },

    #[error("generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: u32, reason: String },

    /// The input set does not satisfy the hypotheses of a pipeline.
    #[error("hypothesis failure: {0}")]
    Hypothesis(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
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
