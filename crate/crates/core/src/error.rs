use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("flag triple is not generic")]
    NotGeneric,
    #[error("index {0:?} is not in the admissible set")]
    InvalidIndex(Vec<usize>),
    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("element is not hyperbolic (|trace| = {0})")]
    NotHyperbolic(f64),
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
}

pub type Result<T> = std::result::Result<T, Error>;
