//! Simulated calibration chain shared by the Lindblad experiments: π pulse,
//! dephasing tuned to the measured T₂*, then the magnon drive map.

use crate::config::{DriveMapKind, Settings};
use crate::error::Result;
use magnon_core::{DeviceParams, HilbertSpec};
use magnon_dynamics::calibrate::{
    calibrate_magnon_drive, calibrate_pi_pulse, fitted_t2, tune_dephasing, DephasingTuning, MagnonCalibration,
    MagnonCalibrationOptions, PiCalibration, T2_TARGET,
};
use magnon_dynamics::{DriveMap, SimulationSetup, DEFAULT_DT};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct Prepared {
    /// Sensing setup with the calibrated π amplitude and dephasing.
    pub setup: SimulationSetup,
    pub pi: PiCalibration,
    /// T₂* fitted with the textbook dephasing rate.
    pub t2_textbook: f64,
    pub dephasing: Option<DephasingTuning>,
    pub calibration: Option<MagnonCalibration>,
    pub map: DriveMap,
}

impl Prepared {
    /// Calibration constants for the manifest.
    pub fn results(&self) -> BTreeMap<String, f64> {
        let mut r = BTreeMap::new();
        r.insert("pi_amplitude_rad_s".into(), self.pi.amplitude);
        r.insert("pi_p_e_max".into(), self.pi.p_e_max);
        r.insert("t2_textbook_us".into(), self.t2_textbook * 1e6);
        r.insert("gamma_phi_s".into(), self.setup.rates.gamma_phi);
        if let Some(d) = &self.dephasing {
            r.insert("t2_tuned_us".into(), d.t2_fit * 1e6);
        }
        if let Some(c) = &self.calibration {
            r.insert("calibration_omega_d_rad_s".into(), c.omega_d);
            r.insert("calibration_lambda_rad_s".into(), c.lambda);
            if let Some(res) = &c.result {
                r.insert("calibration_fit_n_bar".into(), res.fit.n_bar);
                r.insert("calibration_fit_chi_mhz".into(), magnon_core::units::to_mhz(res.fit.chi));
                r.insert("calibration_fit_gamma_m_mhz".into(), magnon_core::units::to_mhz(res.fit.gamma_m));
                r.insert("calibration_n_ss".into(), res.views.n_ss);
                r.insert("calibration_n_ta".into(), res.views.n_ta);
            }
        }
        r
    }
}

/// Runs the calibration chain for the sensing truncation in `settings`.
pub fn prepare(params: &DeviceParams, settings: &Settings) -> Result<Prepared> {
    let hilbert = HilbertSpec::new(3, settings.sensing_n_m_levels)?;
    let mut setup = SimulationSetup::new(params.clone(), hilbert);
    setup.lambda_ef = settings.lambda_ef;
    let pi = calibrate_pi_pulse(&setup, setup.timing.pulse_width)?;
    setup.pi_amplitude = pi.amplitude;
    let t2_textbook = fitted_t2(&setup)?;
    let dephasing = if settings.tune_dephasing {
        let d = tune_dephasing(&setup, T2_TARGET)?;
        setup.rates.gamma_phi = d.gamma_phi;
        Some(d)
    } else {
        None
    };
    let (calibration, map) = match settings.drive_map {
        DriveMapKind::SteadyState => (None, DriveMap::SteadyState),
        DriveMapKind::Calibrated => {
            let cal = calibrate(&setup, settings)?;
            let lambda = cal.lambda;
            (Some(cal), DriveMap::Calibrated { lambda })
        }
    };
    Ok(Prepared {
        setup,
        pi,
        t2_textbook,
        dephasing,
        calibration,
        map,
    })
}

/// Magnon-population calibration at the calibration truncation.
pub fn calibrate(setup: &SimulationSetup, settings: &Settings) -> Result<MagnonCalibration> {
    let mut cal_setup = setup.clone();
    cal_setup.hilbert = HilbertSpec::new(setup.hilbert.n_q_levels, settings.calibration_n_m_levels)?;
    Ok(calibrate_magnon_drive(
        &cal_setup,
        settings.calibration_target,
        &MagnonCalibrationOptions::default(),
    )?)
}

/// Nearest multiple of the integration step, so sensing times sit on the lattice.
pub fn on_lattice(t: f64, dt: f64) -> f64 {
    (t / dt).round() * dt
}

/// Converts microseconds to seconds on the default integration lattice.
pub fn tau_from_us(us: f64) -> f64 {
    on_lattice(us * 1e-6, DEFAULT_DT)
}

/// Lattice time in microseconds, rounded to the nearest step so labels stay clean.
pub fn us_from_lattice(t: f64) -> f64 {
    (t / DEFAULT_DT).round() / (magnon_core::units::US / DEFAULT_DT).round()
}
