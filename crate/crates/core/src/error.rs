use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Error kinds shared by every stage of the pipeline.
///
/// The CLI maps these onto process exit codes, so the variants are grouped by
/// how a caller is expected to react rather than by the module that raised
/// them.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must agree in shape do not (site counts, bond
    /// dimensions, degrees).
    #[error("structural mismatch: {0}")]
    Structural(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A function argument lies outside the mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An input violates a documented precondition (e.g. a non-normalized
    /// guiding state).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The requested computation exceeds a configured size budget.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A numerical procedure failed (singular system, no convergence where
    /// convergence is mandatory, LAPACK failure).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The scanned energy window does not bracket the threshold crossing.
    #[error("ground state outside scanned window: {0}")]
    OutsideWindow(String),

    /// A binary container could not be decoded.
    #[error("malformed container at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Numerical(e.to_string())
    }
}
