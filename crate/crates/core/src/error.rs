use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dense dimension {dim} exceeds the configured limit {limit}")]
    DenseLimitExceeded { dim: usize, limit: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("digit {digit} out of range for local dimension {d}")]
    DigitOutOfRange { digit: usize, d: usize },

    #[error("wire {wire} out of range for a {n}-wire circuit")]
    WireOutOfRange { wire: usize, n: usize },

    #[error("control and target share wire {0}")]
    WireConflict(usize),

    #[error("{0}")]
    Unsupported(String),

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
