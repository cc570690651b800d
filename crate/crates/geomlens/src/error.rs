use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: format error at byte {offset}: {detail}")]
    Format {
        path: PathBuf,
        offset: u64,
        detail: String,
    },

    #[error("{path}: format error at line {line}: {detail}")]
    FormatLine {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("insufficient coverage: {0}")]
    InsufficientCoverage(String),

    #[error("training diverged at epoch {epoch} (learning rate {lr}): non-finite loss")]
    Divergence { epoch: usize, lr: f64 },

    #[error("config errors:\n{}", .0.join("\n"))]
    Config(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
