use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported width: {num_qubits} qubits (allowed {min}..={max})")]
    WidthOutOfRange {
        num_qubits: usize,
        min: usize,
        max: usize,
    },

    #[error("basis index {index} out of range for {num_qubits} qubits")]
    BasisIndex { index: usize, num_qubits: usize },

    #[error("width mismatch: expected {expected} qubits, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },

    #[error("parameter count mismatch: circuit expects {expected}, got {actual}")]
    ParamCount { expected: usize, actual: usize },

    #[error("invalid gate #{index}: {reason}")]
    InvalidGate { index: usize, reason: String },

    #[error("circuit has unused parameters: {0:?}")]
    UnusedParams(Vec<usize>),

    #[error("{what} too large for dense evaluation: {num_qubits} qubits (max {max})")]
    TooLarge {
        what: &'static str,
        num_qubits: usize,
        max: usize,
    },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite loss at epoch {epoch}")]
    NonFinite { epoch: usize },

    #[error("no acceptable watermark candidate after {tried} tries (best aggregate score {best_score})")]
    NoCandidate { tried: usize, best_score: f64 },

    #[error("disconnected coupling map")]
    Disconnected,

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
