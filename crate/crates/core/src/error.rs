use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps `Consistency` to exit code 3 and every other variant to 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller broke a shape or size contract.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Input is outside the set the operation is defined on.
    #[error("validation failed: {0}")]
    Validation(String),
    /// Point lies on (or too close to) a chamber wall.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// An internal cross-check between two computation routes failed.
    #[error("consistency failure: {0}")]
    Consistency(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
