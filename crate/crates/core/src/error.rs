use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator `{operator}` produced a non-finite entry at index {index}")]
    NonFinite { operator: String, index: usize },

    #[error("operator `{0}` does not support transpose products")]
    TransposeUnsupported(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("denominator vanished at diagonal entry {index}")]
    ZeroDenominator { index: usize },

    #[error("probe entry {index} of probe {probe} is exactly zero")]
    ZeroProbeEntry { probe: usize, index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero diagonal entry in row {row}; bound is undefined")]
    ZeroDiagonal { row: usize },

    #[error("basis already spans all {0} dimensions; compute the diagonal directly")]
    BasisExhausted(usize),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has no edges after removing self-loops")]
    EmptyGraph,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
