use thiserror::Error;

/// Errors raised by the solver, optimizer, simulator and experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid state (i={i}, j={j}): ages must satisfy 1 <= i <= j")]
    InvalidState { i: u32, j: u32 },

    #[error("invalid grid bounds i_max={i_max}, j_max={j_max}: need 1 <= i_max <= j_max")]
    InvalidGrid { i_max: usize, j_max: usize },

    #[error("value iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
