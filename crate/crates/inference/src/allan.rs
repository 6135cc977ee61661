//! Allan deviation of shot records and the S/√T power law.

use crate::error::{Error, Result};
use crate::fit::{fit_least_squares, FitOptions, Model};
use crate::shots::ShotRecord;
use magnon_core::analytic::loglog_slope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AllanEstimator {
    /// Adjacent, disjoint subsets.
    #[default]
    NonOverlapping,
    /// Every start offset.
    Overlapping,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllanSeries {
    /// Shots per subset.
    pub window: Vec<usize>,
    /// Averaging time N·τ_total, s.
    pub t: Vec<f64>,
    pub deviation: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    /// Ξ(1 s), 1/√Hz.
    pub s: f64,
    pub slope: f64,
}

impl AllanSeries {
    /// S from Ξ(T) = S/√T with relative weights, and the free log–log slope.
    pub fn power_law(&self) -> Result<PowerLaw> {
        let keep: Vec<usize> = (0..self.t.len()).filter(|&i| self.deviation[i] > 0.0).collect();
        if keep.len() < 2 {
            return Err(Error::Degenerate("fewer than two nonzero deviations".into()));
        }
        let t: Vec<f64> = keep.iter().map(|&i| self.t[i]).collect();
        let d: Vec<f64> = keep.iter().map(|&i| self.deviation[i]).collect();
        let init = d[0] * t[0].sqrt();
        let opts = FitOptions::default()
            .with_bounds(vec![(0.0, f64::INFINITY)])
            .with_sigma(d.clone());
        let fit = fit_least_squares(Model::AllanPowerlaw, &t, &d, &[init], &opts)?;
        Ok(PowerLaw {
            s: fit.params[0],
            slope: loglog_slope(&t, &d),
        })
    }
}

/// Log-spaced window lengths from 1 shot up to `len / min_subsets`.
pub fn log_windows(len: usize, per_decade: usize, min_subsets: usize) -> Vec<usize> {
    let max = len / min_subsets.max(2);
    if max == 0 || per_decade == 0 {
        return Vec::new();
    }
    let steps = ((max as f64).log10() * per_decade as f64).floor() as usize;
    let mut out: Vec<usize> = (0..=steps)
        .map(|k| 10f64.powf(k as f64 / per_decade as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Two-sample deviation √(½⟨(ȳ_{k+1} − ȳ_k)²⟩) of subset means, one per window.
pub fn allan_deviation(values: &[f64], tau_total: f64, windows: &[usize], estimator: AllanEstimator) -> Result<AllanSeries> {
    if windows.is_empty() {
        return Err(Error::invalid("windows", "empty grid"));
    }
    if !(tau_total > 0.0) {
        return Err(Error::invalid("tau_total", "must be positive"));
    }
    let mut deviation = Vec::with_capacity(windows.len());
    for &n in windows {
        if n == 0 || values.len() / n < 2 {
            return Err(Error::WindowTooLong {
                window: n,
                len: values.len(),
            });
        }
        let avar = match estimator {
            AllanEstimator::NonOverlapping => {
                let means: Vec<f64> = values.chunks_exact(n).map(mean).collect();
                let d2: Vec<f64> = means.windows(2).map(|w| (w[1] - w[0]).powi(2)).collect();
                0.5 * mean(&d2)
            }
            AllanEstimator::Overlapping => {
                // Prefix sums give every window mean in O(len).
                let mut prefix = Vec::with_capacity(values.len() + 1);
                prefix.push(0.0);
                for v in values {
                    prefix.push(prefix.last().unwrap() + v);
                }
                let m = |i: usize| (prefix[i + n] - prefix[i]) / n as f64;
                let count = values.len() + 1 - 2 * n;
                let sum: f64 = (0..count).map(|i| (m(i + n) - m(i)).powi(2)).sum();
                0.5 * sum / count as f64
            }
        };
        deviation.push(avar.sqrt());
    }
    Ok(AllanSeries {
        window: windows.to_vec(),
        t: windows.iter().map(|&n| n as f64 * tau_total).collect(),
        deviation,
    })
}

pub fn allan_deviation_record(record: &ShotRecord, windows: &[usize], estimator: AllanEstimator) -> Result<AllanSeries> {
    allan_deviation(&record.as_f64(), record.tau_total, windows, estimator)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordSensitivity {
    pub allan: AllanSeries,
    /// Qubit-population deviation at T = 1 s.
    pub xi_q_1s: f64,
    pub slope: f64,
    pub eta: f64,
    /// Ξ_q(1 s)/η, magnons/√Hz.
    pub sensitivity: f64,
}

/// Minimum number of subsets kept at the longest averaging window.
pub const MIN_SUBSETS: usize = 10;

/// Sensitivity from a shot record and an efficiency η, via the Allan power law.
pub fn sensitivity_from_record(record: &ShotRecord, eta: f64) -> Result<RecordSensitivity> {
    if !(eta > 0.0) {
        return Err(Error::Core(magnon_core::Error::ZeroEfficiency));
    }
    let windows = log_windows(record.len(), 5, MIN_SUBSETS);
    if windows.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2 * MIN_SUBSETS,
            got: record.len(),
        });
    }
    let allan = allan_deviation_record(record, &windows, AllanEstimator::NonOverlapping)?;
    let law = allan.power_law()?;
    Ok(RecordSensitivity {
        allan,
        xi_q_1s: law.s,
        slope: law.slope,
        eta,
        sensitivity: law.s / eta,
    })
}
