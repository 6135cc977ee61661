use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("parameter file: {0}")]
    ParameterFile(String),

    #[error("unsupported transmon truncation: {0} levels (expected 2 or 3)")]
    QubitLevels(usize),

    #[error("resonant denominator in {what}: detuning {detuning:e} rad/s")]
    Resonance { what: &'static str, detuning: f64 },

    #[error("dispersive formula straddles a pole: delta = {delta:e}, delta + alpha = {delta_plus_alpha:e}")]
    Straddle { delta: f64, delta_plus_alpha: f64 },

    #[error("could not label dressed state {label}: best overlap {overlap:.3} below 0.5")]
    Assignment { label: String, overlap: f64 },

    #[error("eigensolver did not converge")]
    Eigensolver,

    #[error("magnon linewidth must be positive")]
    ZeroMagnonLinewidth,

    #[error("sensitivity undefined: efficiency is zero")]
    ZeroEfficiency,

    #[error("no root of the unit-SNR condition in [{lo:e}, {hi:e}]")]
    NoRootInBracket { lo: f64, hi: f64 },

    #[error("{0}")]
    Domain(String),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
