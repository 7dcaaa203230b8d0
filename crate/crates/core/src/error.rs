use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FgftError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FgftError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("matrix is already diagonal")]
    AlreadyDiagonal,

    #[error("dimension {n} exceeds the dense size guard of {limit}")]
    SizeGuard { n: usize, limit: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("corrupt FGFT file: {0}")]
    CorruptFile(String),

    #[error("unsupported FGFT file version {0}")]
    VersionMismatch(u32),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl FgftError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FgftError::Io {
            path: path.into(),
            source,
        }
    }
}
