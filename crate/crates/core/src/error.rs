use thiserror::Error;

pub type Result<T> = std::result::Result<T, QpfError>;

#[derive(Debug, Error)]
pub enum QpfError {
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("operator structure: {0}")]
    Structure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("missing dependency: {0}")]
    Dependency(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Iterative method stopped at its cap. The best estimates are kept so
    /// callers can decide whether they are good enough.
    #[error("no convergence after {iterations} iterations: {what}")]
    Convergence {
        what: String,
        iterations: usize,
        best: Vec<f64>,
    },

    /// Post-selecting the 0 outcome is impossible: the surviving branch has
    /// (numerically) vanished.
    #[error("post-selection extinct at step {step}: probability {probability:e}")]
    Extinction { step: usize, probability: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for QpfError {
    fn from(e: serde_json::Error) -> Self {
        QpfError::Parse(format!("line {} column {}: {}", e.line(), e.column(), e))
    }
}
