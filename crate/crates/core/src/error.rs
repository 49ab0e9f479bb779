use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("frame has no vectors")]
    EmptyFrame,

    #[error("frame dimension must be at least 1")]
    ZeroDimension,

    #[error("dimension mismatch: expected length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("measurement {index} is negative ({value})")]
    NegativeMeasurement { index: usize, value: f64 },

    #[error("operator is singular within tolerance")]
    SingularOperator,

    #[error("need at least {needed} vectors, frame has {found}")]
    InsufficientVectors { needed: usize, found: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("measurements are not realizable by any signal (residual {residual:.3e} > {threshold:.3e})")]
    InconsistentMeasurements { residual: f64, threshold: f64 },

    #[error("product estimate has contradictory signs on edge ({0}, {1})")]
    InconsistentSigns(usize, usize),

    #[error("sampling budget exhausted after {0} draws")]
    BudgetExhausted(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
