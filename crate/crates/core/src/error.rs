use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SwscError>;

#[derive(Debug, Error)]
pub enum SwscError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numerical failure: {message} (sweeps={sweeps}, off-diagonal={off_diagonal:e})")]
    Numerical {
        message: String,
        sweeps: usize,
        off_diagonal: f64,
    },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SwscError {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        SwscError::Shape(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        SwscError::Parameter(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        SwscError::Format {
            offset,
            message: msg.into(),
        }
    }

    pub(crate) fn integrity(msg: impl Into<String>) -> Self {
        SwscError::Integrity(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SwscError::Io {
            path: path.into(),
            source,
        }
    }
}
