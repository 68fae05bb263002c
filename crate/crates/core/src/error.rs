use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("unsupported pulse shape for closed form: {0}")]
    UnsupportedShape(String),

    #[error("numerical error at {location}: {message}")]
    Numerical { location: String, message: String },

    #[error("map extent too small: {0}")]
    Extent(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("no data: {0}")]
    NoData(String),

    #[error("normalization failed: {0}")]
    Normalization(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Config(_)
            | Error::UnsupportedShape(_)
            | Error::Resolution(_)
            | Error::Extent(_) => 2,
            Error::Convergence { .. } | Error::Numerical { .. } => 3,
            Error::UndefinedMetric(_)
            | Error::NoData(_)
            | Error::Normalization(_)
            | Error::Parse { .. }
            | Error::Format(_)
            | Error::Io(_)
            | Error::Json(_) => 4,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
