//! Shared domain types, parameters, operators and closed-form models for
//! dispersive magnon sensing with a transmon qubit.

pub mod analytic;
pub mod error;
pub mod hilbert;
pub mod hybrid;
pub mod params;
pub mod roots;
pub mod units;

pub use error::{Error, Result};
pub use hilbert::{build_operators, CMatrix, DensityMatrix, HilbertSpec, OperatorSet};
pub use params::{coil_to_frequency, DeviceParams};
