//! Multi-Fock fit of a magnon-number-split qubit spectrum.

use crate::error::{Error, Result};
use crate::fit::{fit_least_squares, FitOptions, FitResult, Model, MULTI_FOCK_N_MAX};
use crate::spectrum::{peaks, Spectrum};
use magnon_core::analytic::{composite_spectrum, DispersiveAux};
use magnon_core::units::mhz;

/// Points with |ω| below this are left out of the fit. Near DC a finite,
/// mean-subtracted record rings with the sampling kernel, and the ringing
/// depends on zero padding.
pub fn dc_guard() -> f64 {
    mhz(1.0)
}

/// Quantities held fixed during the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedLinewidths {
    /// Bare qubit linewidth, rad/s.
    pub gamma_q: f64,
    /// Magnon drive detuning, rad/s.
    pub delta_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationFit {
    pub delta_s0: f64,
    pub chi: f64,
    pub gamma_m: f64,
    pub n_bar: f64,
    pub scale: f64,
    pub offset: f64,
}

impl CalibrationFit {
    fn from_result(r: &FitResult) -> Self {
        Self {
            delta_s0: r.params[0],
            chi: r.params[1],
            gamma_m: r.params[2],
            n_bar: r.params[3],
            scale: r.params[4],
            offset: r.params[5],
        }
    }
}

/// Initial guess from the two strongest peaks.
///
/// The strongest peak seeds Δ_s⁰, the next one seeds 2χ + Δ_d, and their
/// height ratio above the baseline, scaled by the linewidth ratio, seeds n̄.
/// The baseline is the smallest spectral value. γ_m starts at |χ|.
pub fn initial_guess(spectrum: &Spectrum, fixed: FixedLinewidths) -> Result<[f64; 8]> {
    let idx = peaks(spectrum);
    let resolution = spectrum.omega.get(1).map_or(0.0, |w| w - spectrum.omega[0]).abs();
    let main = *idx
        .first()
        .ok_or_else(|| Error::Degenerate("spectrum has no peak".into()))?;
    let x0 = spectrum.omega[main];
    let side = idx
        .iter()
        .skip(1)
        .copied()
        .find(|&i| (spectrum.omega[i] - x0).abs() > 2.0 * resolution)
        .ok_or_else(|| Error::Degenerate("no Fock sideband next to the main peak".into()))?;
    let chi = 0.5 * (spectrum.omega[side] - x0 - fixed.delta_d);
    let gamma_m = chi.abs();
    let base = spectrum.value.iter().copied().fold(f64::INFINITY, f64::min).clamp(-1.0, 1.0);
    let height = |i: usize| (spectrum.value[i] - base).max(0.0);
    let ratio = if height(main) > 0.0 { height(side) / height(main) } else { 0.0 };
    let n_bar = (ratio * (fixed.gamma_q + gamma_m) / fixed.gamma_q).clamp(0.01, 3.0);
    Ok(seeded(spectrum, main, [x0, chi, gamma_m, n_bar, 1.0, base, fixed.gamma_q, fixed.delta_d]))
}

/// Scale matched to the main peak height for the other seeded values.
fn seeded(spectrum: &Spectrum, main: usize, mut init: [f64; 8]) -> [f64; 8] {
    let unit = DispersiveAux::with_population(init[1], init[2], init[7], init[3])
        .map(|aux| composite_spectrum(init[0], init[0], &aux, init[6], 1.0, 0.0, MULTI_FOCK_N_MAX))
        .unwrap_or(0.0);
    init[4] = if unit > 0.0 { (spectrum.value[main] - init[5]).max(0.0) / unit } else { 1.0 };
    init
}

/// Extra n̄ seeds tried after the peak-ratio guess; the lowest residual wins.
const N_BAR_SEEDS: [f64; 3] = [0.1, 0.5, 1.5];

/// Fit with γ_q and Δ_d fixed, outside the [`dc_guard`] band.
///
/// The spectrum should already sit on the side of the Fock peaks (see [`Spectrum::half`]).
pub fn fit_calibration_spectrum(spectrum: &Spectrum, fixed: FixedLinewidths) -> Result<(CalibrationFit, FitResult)> {
    let spectrum = spectrum.band(dc_guard(), f64::INFINITY);
    let init = initial_guess(&spectrum, fixed)?;
    let main = peaks(&spectrum)[0];
    let mut best = fit_calibration_spectrum_from(&spectrum, &init);
    for n in N_BAR_SEEDS {
        let mut alt = init;
        alt[3] = n;
        let alt = seeded(&spectrum, main, alt);
        match (&best, fit_calibration_spectrum_from(&spectrum, &alt)) {
            (Ok((_, b)), Ok(c)) if c.1.residual_norm < b.residual_norm => best = Ok(c),
            (Err(_), Ok(c)) => best = Ok(c),
            _ => {}
        }
    }
    best
}

pub fn fit_calibration_spectrum_from(spectrum: &Spectrum, init: &[f64; 8]) -> Result<(CalibrationFit, FitResult)> {
    let chi = init[1];
    let (clo, chi_hi) = if chi < 0.0 { (5.0 * chi, 0.1 * chi) } else { (0.1 * chi, 5.0 * chi) };
    let span = spectrum
        .omega
        .iter()
        .fold(0.0f64, |m, w| m.max(w.abs()));
    let bounds = vec![
        (-span, span),
        (clo, chi_hi),
        (1e-3 * chi.abs(), 50.0 * chi.abs()),
        (0.0, 10.0),
        (0.0, f64::INFINITY),
        (-1.0, 1.0),
        (init[6], init[6]),
        (init[7], init[7]),
    ];
    let opts = FitOptions::default()
        .with_bounds(bounds)
        .with_fixed(vec![false, false, false, false, false, false, true, true]);
    let model = Model::MultiFock { n_max: MULTI_FOCK_N_MAX };
    let res = fit_least_squares(model, &spectrum.omega, &spectrum.value, init, &opts)?;
    Ok((CalibrationFit::from_result(&res), res))
}
