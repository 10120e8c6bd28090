use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("incompatible spaces: {0}")]
    IncompatibleSpace(String),
    #[error("set is unbounded in dimension `{0}`")]
    Unbounded(String),
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("existential elimination exceeded its budget")]
    Elimination,
}
