use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid marginal distribution: {0}")]
    InvalidMarginals(String),

    #[error("empty weight set: {0}")]
    EmptySet(String),

    #[error("degenerate weight set: index {0} has zero weight in every member")]
    Degenerate(usize),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),

    #[error("enumeration too large: {points} points exceeds guard {guard}")]
    GridTooLarge { points: f64, guard: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("index ({row}, {col}) out of range for {rows}x{cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("training diverged at epoch {epoch}: objective {objective}")]
    Diverged { epoch: usize, objective: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
