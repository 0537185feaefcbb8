use thiserror::Error;

/// Errors raised by the library. Each variant carries a human readable detail.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The caller violated a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The requested variant is not implemented.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// The request would exceed the configured memory or size budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// A statistic is undefined for the given data (e.g. zero variance).
    #[error("degenerate data: {0}")]
    Degenerate(String),
    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
