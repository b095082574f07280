use thiserror::Error;

/// Errors raised by the queue analysis, approximation and allocation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FctlError {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The model or intersection cannot be operated stably.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An iterative or quadrature routine failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A computation would exceed a hard size limit.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Inputs are inconsistent with each other (mismatched lengths, bad parameters).
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, FctlError>;

impl FctlError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        FctlError::Domain(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        FctlError::Infeasible(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        FctlError::Numeric(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FctlError::Invalid(msg.into())
    }
}
