use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    /// The cubic could not be bracketed. Valid parameters never get here.
    #[error("cubic root bracketing failed at y_max = {y_max:e}")]
    BracketFailure { y_max: f64 },

    #[error("cubic solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unsupported for {kind} equilibrium: {what}")]
    Unsupported { kind: &'static str, what: String },

    #[error("equilibria were solved from different parameters")]
    ParamMismatch,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix `{name}` is not symmetric positive definite: {reason}")]
    NotSpd { name: &'static str, reason: String },

    #[error("invalid grid: {0}")]
    Grid(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam { field, reason: reason.into() }
    }

    /// True for input validation failures, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::BracketFailure { .. } | Error::NoConvergence { .. })
    }
}
