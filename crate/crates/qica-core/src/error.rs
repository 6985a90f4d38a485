use thiserror::Error;

/// Errors produced by the decomposition and sampling routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated (shape, range, finiteness).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The input is structurally valid but degenerate for the requested
    /// operation (e.g. an all-zero matrix has no row distribution).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A categorical distribution has zero total mass.
    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    /// A feature expansion would exceed the configured column cap.
    #[error("capacity exceeded: expansion needs {needed} columns, cap is {cap}")]
    CapacityExceeded { needed: usize, cap: usize },

    /// Malformed CSV content; `row` and `col` are 1-based.
    #[error("parse error at row {row}, column {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    /// Malformed binary matrix file.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }
}
