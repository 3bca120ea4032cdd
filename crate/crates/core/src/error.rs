use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoherenceError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not an isometry (deviation {0:.3e})")]
    NotIsometry(f64),

    #[error("channel has {count} Kraus operators but at most {max} are supported (input dimension)")]
    TooManyKraus { count: usize, max: usize },

    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("isometry completion failed: {0}")]
    Completion(String),

    #[error("malformed JSON data: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoherenceError>;
