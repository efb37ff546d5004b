use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value produced by node {node} ({op})")]
    NonFinite { node: usize, op: &'static str },

    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed {kind} file {path}: {detail}")]
    Format {
        kind: &'static str,
        path: PathBuf,
        detail: String,
    },

    #[error("dimension mismatch: layout with {joints} joints expects D={expected}, found {found}")]
    DimensionMismatch {
        joints: usize,
        expected: usize,
        found: usize,
    },

    #[error("state became non-finite at step {step}")]
    DivergedSampling { step: usize },

    #[error("training diverged at step {step} (loss {loss})")]
    DivergedTraining { step: usize, loss: f64 },

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse failure category, used by the command-line tool to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Io,
    Numeric,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } | Error::Format { .. } | Error::Json(_) | Error::DimensionMismatch { .. } => {
                ErrorCategory::Io
            }
            Error::NonFinite { .. }
            | Error::NonFiniteGradient(_)
            | Error::NotPsd { .. }
            | Error::DivergedSampling { .. }
            | Error::DivergedTraining { .. } => ErrorCategory::Numeric,
            Error::Shape { .. } | Error::InvalidConfig(_) | Error::InvalidArgument(_) => ErrorCategory::Usage,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}
