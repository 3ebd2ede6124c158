use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} index {index} out of range (limit {limit})")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("integration failed at t = {t:.9} s: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("solution diverged (non-finite state) at t = {t:.9} s")]
    Divergence { t: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Numerical failures (as opposed to bad input) map to a distinct exit
    /// status in the command-line tool.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::IntegrationFailure { .. } | Error::Divergence { .. }
        )
    }
}
