use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] lsem_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Input { path: String, message: String },

    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// Fails with the offending path when `path` cannot be opened for reading.
    pub fn check_readable(path: &std::path::Path) -> CliResult<()> {
        std::fs::File::open(path)
            .map(drop)
            .map_err(|source| CliError::File { path: path.display().to_string(), source })
    }

    /// Process exit status: 2 for filesystem failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::File { .. } => 2,
            CliError::Json(e) if e.is_io() => 2,
            CliError::Core(e) if e.is_io() => 2,
            _ => 1,
        }
    }
}
