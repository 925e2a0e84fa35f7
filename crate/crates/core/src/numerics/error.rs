use thiserror::Error;

/// Failures raised by the numerical primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("{value} lies outside the domain [{lower}, {upper}]")]
    Domain { value: f64, lower: f64, upper: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no sign change on bracket [{lo}, {hi}] (f(lo)={f_lo}, f(hi)={f_hi})")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("non-finite function value {value} at theta={theta:?}")]
    Evaluation { theta: Vec<f64>, value: f64 },
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, NumericsError>;

pub(crate) fn invalid(msg: impl Into<String>) -> NumericsError {
    NumericsError::InvalidArgument(msg.into())
}
