use thiserror::Error;

/// Errors raised across the engine.
///
/// Variants map onto the failure classes the CLI reports through its exit
/// codes: `InvalidInput` and `Shape` are caller mistakes, the remaining ones
/// are numerical failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("integrator failure: {0}")]
    IntegratorFailure(String),

    #[error("boundary contact: {0}")]
    BoundaryContact(String),

    #[error("internal consistency assertion failed: {0}")]
    ConsistencyAssertion(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// True for failures that stem from the numerics rather than from a
    /// malformed request.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::InvalidInput(_) | Error::Shape(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
