use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input value violates its documented range or invariant.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The constrained stiffness system could not be factorized.
    #[error("solve failed: {0}")]
    Solve(String),

    /// An iterative numerical procedure failed to bracket or converge.
    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    /// A dataset or tensor file is malformed. `sample` names the offending
    /// sample when the failure is attributable to one.
    #[error("format error{}: {message}", sample.map(|i| format!(" in sample {i}")).unwrap_or_default())]
    Format {
        sample: Option<usize>,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn format(sample: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Format {
            sample,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
