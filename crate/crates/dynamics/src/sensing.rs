//! Efficiency and sensitivity from simulated sensing sequences.

use crate::calibrate::SteadyStateDriveMap;
use crate::error::{Error, Result};
use crate::sequence::{simulate_ramsey, SimulationSetup};
use magnon_core::analytic::{shot_noise, unit_snr_root};
use magnon_inference::allan::{sensitivity_from_record, RecordSensitivity};
use magnon_inference::fit::{fit_least_squares, FitOptions, Model};
use magnon_inference::shots::{sample_shots, ShotRecord};
use rayon::prelude::*;
use std::cell::RefCell;

/// Six evenly spaced populations from 0 to 0.05.
pub fn default_targets() -> Vec<f64> {
    (0..6).map(|k| 0.01 * k as f64).collect()
}

/// How a target population becomes a drive amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveMap {
    /// Ω_d = λ√n̄ from a spectrum calibration.
    Calibrated { lambda: f64 },
    /// Inverse of the steady-state population at the sensing detuning.
    SteadyState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityPoint {
    pub tau: f64,
    pub delta_s: f64,
    /// |dp/dn̄| of the measured probability.
    pub eta: f64,
    /// Sign of dp/dn̄.
    pub slope_sign: f64,
    /// Measured p_e with no drive.
    pub p0: f64,
    /// p_e + p_f with no drive, before the readout map.
    pub p0_ideal: f64,
    /// Ξ_q at T = 1 s.
    pub xi_q_1s: f64,
    /// Ξ_q(1 s)/η, magnons/√Hz.
    pub sensitivity: f64,
    pub targets: Vec<f64>,
    pub omega_d: Vec<f64>,
    /// Measured p_e per target.
    pub p_measured: Vec<f64>,
}

/// Drive amplitudes for each target.
pub fn drives_for(setup: &SimulationSetup, delta_s: f64, targets: &[f64], map: DriveMap) -> Result<Vec<f64>> {
    match map {
        DriveMap::Calibrated { lambda } => {
            if !(lambda >= 0.0) {
                return Err(Error::invalid("lambda", "must be nonnegative"));
            }
            targets
                .iter()
                .map(|&n| {
                    if n < 0.0 {
                        Err(Error::invalid("targets", "populations must be nonnegative"))
                    } else {
                        Ok(lambda * n.sqrt())
                    }
                })
                .collect()
        }
        DriveMap::SteadyState => {
            let inv = SteadyStateDriveMap::new(setup, delta_s)?;
            targets.iter().map(|&n| inv.drive_for(n)).collect()
        }
    }
}

/// Simulates each target at every τ, fits p_e = p₀ + slope·n̄ per τ and
/// converts to S = Ξ_q(1 s)/η with Ξ_q from p_e(0).
pub fn sensitivity_protocol(
    setup: &SimulationSetup,
    taus: &[f64],
    delta_s: f64,
    targets: &[f64],
    map: DriveMap,
) -> Result<Vec<SensitivityPoint>> {
    let mut distinct: Vec<f64> = targets.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Degenerate("efficiency fit needs at least two distinct targets".into()));
    }
    let zero = targets
        .iter()
        .position(|&n| n == 0.0)
        .ok_or_else(|| Error::invalid("targets", "must include n̄ = 0 for the noise reference"))?;
    let drives = drives_for(setup, delta_s, targets, map)?;
    let records = drives
        .par_iter()
        .map(|&w| simulate_ramsey(setup, taus, delta_s, w))
        .collect::<Result<Vec<_>>>()?;

    (0..taus.len())
        .map(|i| {
            let p: Vec<f64> = records.iter().map(|r| r.points[i].p_measured).collect();
            let (p0_ols, slope_ols) = ols(targets, &p);
            let fit = fit_least_squares(Model::LinearEta, targets, &p, &[p0_ols, slope_ols], &FitOptions::default())?;
            let slope = fit.params[1];
            if slope == 0.0 || !slope.is_finite() {
                return Err(Error::Degenerate(format!("zero efficiency at τ = {:e} s", taus[i])));
            }
            let p0 = records[zero].points[i].p_measured;
            let xi = shot_noise(p0, setup.params.tau_total, 1.0);
            Ok(SensitivityPoint {
                tau: taus[i],
                delta_s,
                eta: slope.abs(),
                slope_sign: slope.signum(),
                p0,
                p0_ideal: records[zero].points[i].p_ideal,
                xi_q_1s: xi,
                sensitivity: xi / slope.abs(),
                targets: targets.to_vec(),
                omega_d: drives.clone(),
                p_measured: p,
            })
        })
        .collect()
}

fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSensitivity {
    pub record: ShotRecord,
    pub result: RecordSensitivity,
}

/// Draws `shots` single-shot outcomes at the zero-drive probability of
/// `point` and extracts S from the Allan power law.
pub fn monte_carlo_sensitivity(
    setup: &SimulationSetup,
    point: &SensitivityPoint,
    shots: usize,
    seed: u64,
    stream: u64,
) -> Result<MonteCarloSensitivity> {
    let mut record = sample_shots(point.p0_ideal, shots, setup.anchors, setup.params.tau_total, seed, stream)?;
    record.meta.tau = Some(point.tau);
    record.meta.delta_s = Some(point.delta_s);
    record.meta.n_target = Some(0.0);
    let result = sensitivity_from_record(&record, point.eta)?;
    Ok(MonteCarloSensitivity { record, result })
}

/// Unit-SNR sensitivity from simulated p_e(n̄), with n̄ the steady-state
/// population of a constant drive. This is the numerical rung of the model
/// ladder; analytic rungs live in the core crate.
pub fn numerical_sensitivity(setup: &SimulationSetup, tau: f64, delta_s: f64) -> Result<f64> {
    let inv = SteadyStateDriveMap::new(setup, delta_s)?;
    let p_at = |n: f64| -> Result<f64> {
        let w = inv.drive_for(n)?;
        Ok(simulate_ramsey(setup, &[tau], delta_s, w)?.points[0].p_measured)
    };
    let failure = RefCell::new(None);
    let s = unit_snr_root(
        |n| match p_at(n) {
            Ok(p) => p,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        setup.params.tau_total,
    );
    match (s, failure.into_inner()) {
        (_, Some(e)) => Err(e),
        (s, None) => Ok(s?),
    }
}
