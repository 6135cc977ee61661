use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample grid is not uniform at index {index} (step {step:e}, expected {expected:e})")]
    NonUniformGrid { index: usize, step: f64, expected: f64 },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },

    #[error("initial value of `{name}` = {value:e} lies outside [{lo:e}, {hi:e}]")]
    InitOutOfBounds { name: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("fit did not converge after {iterations} iterations (residual norm {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("fit is degenerate: {0}")]
    Degenerate(String),

    #[error("probability {0} outside [0, 1]")]
    Probability(f64),

    #[error("averaging window of {window} shots leaves fewer than two subsets in {len} shots")]
    WindowTooLong { window: usize, len: usize },

    #[error("invalid argument `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error(transparent)]
    Core(#[from] magnon_core::Error),
}

impl Error {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }
}
