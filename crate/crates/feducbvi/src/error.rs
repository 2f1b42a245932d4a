use std::io;
use std::path::PathBuf;

use feducbvi_core::Error as CoreError;

/// Failure of a command, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("invariant breach: {0}")]
    Invariant(String),
    #[error("sweep cell (eps_p={eps_p}, M={m}, seed={seed}) failed: {source}")]
    Cell {
        eps_p: f64,
        m: usize,
        seed: u64,
        source: Box<AppError>,
    },
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for bad configuration, 2 for I/O, 3 for an invariant breach.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 1,
            AppError::Io { .. } => 2,
            AppError::Invariant(_) => 3,
            AppError::Cell { source, .. } => source.exit_code(),
        }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidInput { .. } | CoreError::ShapeMismatch { .. } => AppError::Config(e.to_string()),
            CoreError::InvalidMdp(_) | CoreError::IndexOutOfRange { .. } | CoreError::Invariant(_) => {
                AppError::Invariant(e.to_string())
            }
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
