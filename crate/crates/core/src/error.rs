use thiserror::Error;

/// Errors raised by the library. The CLI maps these onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// Caller supplied inconsistent arguments (mismatched orders, bad block sizes, parse failures).
    #[error("usage error: {0}")]
    Usage(String),
    /// A value lies outside the region where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("convergence error: {message} (last residual {residual:e})")]
    Convergence { message: String, residual: f64 },
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl LabError {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        LabError::Usage(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        LabError::Domain(msg.into())
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
