use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library. Every variant maps onto exactly one CLI exit
/// code through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("degree {degree} exceeds the supported range for order {order}")]
    OutOfRange { degree: usize, order: usize },

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid measure specification: {0}")]
    InvalidMeasure(String),

    #[error("insufficient data: need {needed} moments, got {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed sample file {path}, line {line}: {msg}")]
    SampleParse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("dual certificate unavailable: {0}")]
    Unavailable(String),

    #[error("flatness precondition violated: {0}")]
    NotFlat(String),

    #[error("atom extraction failed: {0}")]
    ExtractionFailed(String),

    #[error("every relaxation order failed: {0}")]
    AllOrdersFailed(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 1 configuration, 2 numerical, 3 I/O.
    /// Verification failure (4) is not an error and is decided by the caller.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::OutOfRange { .. }
            | Error::Usage(_)
            | Error::Domain(_)
            | Error::InvalidMeasure(_)
            | Error::InsufficientData { .. }
            | Error::Config(_)
            | Error::Json(_) => 1,
            Error::Numerical(_)
            | Error::Unavailable(_)
            | Error::NotFlat(_)
            | Error::ExtractionFailed(_)
            | Error::AllOrdersFailed(_) => 2,
            Error::Io { .. } | Error::SampleParse { .. } => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
