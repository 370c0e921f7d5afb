use thiserror::Error;

/// Failures reported by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("outcome probabilities sum to {0:.12}, basis is incomplete")]
    BasisIncomplete(f64),
    #[error("quantity is undefined: {0}")]
    Undefined(String),
    #[error("derivative of the mean response vanishes at phi = {0}")]
    Divergent(f64),
    #[error("outcome has zero evidence")]
    ImpossibleOutcome,
    #[error("monotonicity violated by {0:.3e}")]
    NonMonotone(f64),
    #[error("{0} atoms exceed the full-space cap of {1}")]
    TooLarge(usize, usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for violations of internal numerical contracts as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian(_)
                | Error::NotUnitary(_)
                | Error::BasisIncomplete(_)
                | Error::NonMonotone(_)
                | Error::Divergent(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
