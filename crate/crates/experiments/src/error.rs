use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown experiment id `{0}`")]
    UnknownExperiment(String),
    #[error("config: {field}: {reason}")]
    Config { field: String, reason: String },
    #[error("config file: {0}")]
    ConfigFile(String),
    #[error("output {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] magnon_core::Error),
    #[error(transparent)]
    Dynamics(#[from] magnon_dynamics::Error),
    #[error(transparent)]
    Inference(#[from] magnon_inference::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 2 for configuration and output problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::UnknownExperiment(_) | Self::Config { .. } | Self::ConfigFile(_) | Self::Output { .. } | Self::Csv(_) => 2,
            Self::Core(magnon_core::Error::InvalidParameter { .. }) | Self::Core(magnon_core::Error::ParameterFile(_)) => 2,
            Self::Core(_) | Self::Dynamics(_) | Self::Inference(_) => 3,
        }
    }
}
