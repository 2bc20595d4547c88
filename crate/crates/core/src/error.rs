use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {idx} out of range for {n} qubit(s)")]
    IndexOutOfRange { idx: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} supports at most {max} qubit(s), got {n}")]
    CutoffExceeded { what: &'static str, n: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("observable is not traceless (tr = {0:e})")]
    NotTraceless(f64),

    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("not a valid state: {0}")]
    NotAState(String),

    #[error("gate {0} is not Clifford")]
    NonClifford(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
