//! Qubit spectra from Ramsey fringe records.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

/// Relative tolerance on the spacing of a sample grid.
pub const GRID_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Total length as a multiple of the record length; the extra samples are zeros.
    pub zero_pad: usize,
    /// Subtract the record mean before transforming, removing the DC peak.
    pub demean: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            zero_pad: 1,
            demean: false,
        }
    }
}

/// Real part of a discrete Fourier transform on an ascending angular-frequency axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// rad/s
    pub omega: Vec<f64>,
    pub value: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Divides by the largest value.
    pub fn normalized(mut self) -> Result<Self> {
        let max = self.value.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return Err(Error::Degenerate("spectrum has no positive maximum".into()));
        }
        self.value.iter_mut().for_each(|v| *v /= max);
        Ok(self)
    }

    /// Points with ω on one side of zero, reflected onto the other side.
    ///
    /// A real record has a symmetric real spectrum, so only one half carries
    /// information. `sign < 0` keeps ω ≥ 0 and reports it at −ω.
    pub fn half(&self, sign: f64) -> Self {
        let mut out: Vec<(f64, f64)> = self
            .omega
            .iter()
            .zip(&self.value)
            .filter(|(w, _)| **w >= 0.0)
            .map(|(w, v)| (if sign < 0.0 { -w } else { *w }, *v))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            omega: out.iter().map(|p| p.0).collect(),
            value: out.iter().map(|p| p.1).collect(),
        }
    }

    /// Restrict to |ω| ≤ `limit`.
    pub fn window(&self, limit: f64) -> Self {
        self.band(0.0, limit)
    }

    /// Restrict to `lo` ≤ |ω| ≤ `hi`.
    pub fn band(&self, lo: f64, hi: f64) -> Self {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| (lo..=hi).contains(&self.omega[i].abs()))
            .collect();
        Self {
            omega: keep.iter().map(|&i| self.omega[i]).collect(),
            value: keep.iter().map(|&i| self.value[i]).collect(),
        }
    }
}

/// Step of a uniform grid, or the first offending index.
pub fn uniform_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: grid.len(),
        });
    }
    let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::invalid("grid", "must be strictly increasing"));
    }
    for (i, w) in grid.windows(2).enumerate() {
        let d = w[1] - w[0];
        if (d - step).abs() > GRID_TOLERANCE * step {
            return Err(Error::NonUniformGrid {
                index: i + 1,
                step: d,
                expected: step,
            });
        }
    }
    Ok(step)
}

/// Re F{p}(ω), unnormalised.
pub fn ramsey_fft(taus: &[f64], p: &[f64], opts: SpectrumOptions) -> Result<Spectrum> {
    if taus.len() != p.len() {
        return Err(Error::LengthMismatch {
            what: "record",
            got: p.len(),
            expected: taus.len(),
        });
    }
    if opts.zero_pad == 0 {
        return Err(Error::invalid("zero_pad", "must be at least 1"));
    }
    let dt = uniform_step(taus)?;
    let mean = if opts.demean {
        p.iter().sum::<f64>() / p.len() as f64
    } else {
        0.0
    };
    let n = p.len() * opts.zero_pad;
    let mut buf: Vec<Complex64> = p.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    // Reorder from FFT layout to ascending frequency.
    let half = n.div_ceil(2);
    let order = (half..n).chain(0..half);
    let mut omega = Vec::with_capacity(n);
    let mut value = Vec::with_capacity(n);
    for k in order {
        let signed = if k >= half { k as f64 - n as f64 } else { k as f64 };
        omega.push(TAU * signed / (n as f64 * dt));
        value.push(buf[k].re);
    }
    Ok(Spectrum { omega, value })
}

/// Normalised Re F{p_e(τ)} / max.
pub fn spectrum_from_ramsey(taus: &[f64], p: &[f64], opts: SpectrumOptions) -> Result<Spectrum> {
    ramsey_fft(taus, p, opts)?.normalized()
}

/// Local maxima of `value`, strongest first.
pub fn peaks(spectrum: &Spectrum) -> Vec<usize> {
    let v = &spectrum.value;
    let mut idx: Vec<usize> = (0..v.len())
        .filter(|&i| {
            let left = i == 0 || v[i] > v[i - 1];
            let right = i + 1 == v.len() || v[i] >= v[i + 1];
            left && right
        })
        .collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    idx
}
