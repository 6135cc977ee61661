//! Analysis of simulated or measured records: Ramsey spectra, curve fits,
//! shot sampling and Allan deviations.

pub mod allan;
pub mod calibration;
pub mod error;
pub mod fit;
pub mod shots;
pub mod spectrum;

pub use allan::{allan_deviation, sensitivity_from_record, AllanEstimator, AllanSeries, RecordSensitivity};
pub use calibration::{fit_calibration_spectrum, CalibrationFit, FixedLinewidths};
pub use error::{Error, Result};
pub use fit::{fit_least_squares, FitOptions, FitResult, Model};
pub use shots::{sample_shots, ReadoutAnchors, ShotRecord};
pub use spectrum::{spectrum_from_ramsey, Spectrum, SpectrumOptions};
