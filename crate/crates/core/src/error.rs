//! Error types shared by all evaluation routines.

/// Errors reported by evaluation routines.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or conversion could not reach the requested tolerance
    /// within the configured term budget.
    #[error("precision error: {0}")]
    Precision(String),

    /// An iteration (root finding, quadrature refinement) failed to
    /// converge within its step budget.
    #[error("convergence error: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precision(msg: impl Into<String>) -> Self {
        Error::Precision(msg.into())
    }

    pub(crate) fn convergence(msg: impl Into<String>) -> Self {
        Error::Convergence(msg.into())
    }
}
