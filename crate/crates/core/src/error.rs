use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum MgdError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    Length { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite {what} at step {step}")]
    NonFinite { step: u64, what: &'static str },

    #[error("angle undefined for a zero vector")]
    UndefinedAngle,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("{path}: parse error at byte offset {offset}: {message}")]
    Parse {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl MgdError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        MgdError::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MgdError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by numerical blow-up rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, MgdError::NonFinite { .. })
    }
}

pub type Result<T, E = MgdError> = std::result::Result<T, E>;
