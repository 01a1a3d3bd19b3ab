use thiserror::Error;

/// Error taxonomy shared by the whole toolkit.
///
/// `InvalidInput` and `DimensionMismatch` signal bad user data,
/// `Numerical` a failed matrix computation, `Inconsistent` a violated
/// cross-check between two routes that must agree, and `Precondition`
/// an operation invoked on data that does not satisfy its contract.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("internal consistency violation: {0}")]
    Inconsistent(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
