use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] magnon_core::Error),

    #[error(transparent)]
    Inference(#[from] magnon_inference::Error),

    #[error("trace drifted by {drift:e} at t = {t:e} s")]
    TraceDrift { t: f64, drift: f64 },

    #[error("step-size instability at t = {t:e} s: half-step mismatch {mismatch:e}")]
    StepInstability { t: f64, mismatch: f64 },

    #[error("time {t:e} s is not on the integration lattice of step {dt:e} s")]
    OffLattice { t: f64, dt: f64 },

    #[error("time grid must be nondecreasing and start at or after the initial time")]
    NonMonotoneGrid,

    #[error("steady state is not unique: second singular value / norm = {ratio:e}")]
    DegenerateSteadyState { ratio: f64 },

    #[error("no interior maximum in the amplitude sweep [{lo:e}, {hi:e}] rad/s")]
    NoMaximum { lo: f64, hi: f64 },

    #[error("schedule: {0}")]
    Schedule(String),

    #[error("{0}")]
    Degenerate(String),

    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("{what} did not converge in {iterations} iterations (last residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
