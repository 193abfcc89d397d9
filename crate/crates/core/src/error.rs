use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    /// Malformed interchange file. `offset` is the byte position of the fault.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("latent space mismatch: expected {expected}, got {actual}")]
    SpaceMismatch { expected: String, actual: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate projection: primal direction lies in the span of the conditions (residual norm {residual:e})")]
    DegenerateProjection { residual: f64 },

    #[error("condition boundaries are linearly dependent at '{attribute}' (residual norm {residual:e})")]
    Conditioning { attribute: String, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    Data(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("singular regression: {0}")]
    Singular(String),

    #[error("model construction failed: {0}")]
    Model(String),

    #[error("attribute '{0}' has zero variance")]
    ZeroVariance(String),

    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by the filesystem rather than by the data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            Error::Json(e) => e.is_io(),
            _ => false,
        }
    }
}
