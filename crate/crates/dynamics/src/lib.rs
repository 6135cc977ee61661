//! Lindblad simulation of the qubit pulse sequences with a driven Kittel
//! mode, and the simulated calibration and sensing protocols built on it.

pub mod calibrate;
pub mod error;
pub mod evolve;
pub mod model;
pub mod schedule;
pub mod sensing;
pub mod sequence;
pub mod sparse;
pub mod steady;

pub use calibrate::{calibrate_magnon_drive, calibrate_pi_pulse, tune_dephasing, MagnonCalibration, PiCalibration};
pub use error::{Error, Result};
pub use evolve::{evolve, EvolveOptions, PopulationRecord, Trajectory, DEFAULT_DT};
pub use model::{ChannelKind, ChannelRates, CollapseChannel, EffectiveHamiltonianSpec, LindbladModel, LAMBDA_EF_DEFAULT};
pub use schedule::{gaussian_envelope, GaussianPulse, MagnonDrive, Pulse, PulseSchedule};
pub use sensing::{sensitivity_protocol, DriveMap, SensitivityPoint};
pub use sequence::{ramsey_trajectory, simulate_ramsey, Preparation, RamseyRecord, SimulationSetup};
pub use steady::steady_state;
