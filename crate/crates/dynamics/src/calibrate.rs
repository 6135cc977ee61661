//! Simulated calibration runs: π amplitude, dephasing rate and magnon drive.

use crate::error::{Error, Result};
use crate::evolve::{lattice_index, populations, Integrator};
use crate::schedule::{GaussianPulse, Pulse, PulseSchedule};
use crate::sequence::{simulate_ramsey, PopulationViews, RamseyRecord, SimulationSetup};
use crate::sparse::vectorize;
use crate::steady::steady_magnon_population;
use magnon_core::roots::bracketed_root;
use magnon_core::units::{mhz, NS, US};
use magnon_core::{DensityMatrix, HilbertSpec};
use magnon_inference::calibration::{fit_calibration_spectrum, CalibrationFit, FixedLinewidths};
use magnon_inference::fit::{fit_least_squares, FitOptions, Model};
use magnon_inference::spectrum::{spectrum_from_ramsey, SpectrumOptions};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Points in the coarse π-amplitude sweep.
pub const PI_SWEEP_POINTS: usize = 21;

#[derive(Debug, Clone, PartialEq)]
pub struct PiCalibration {
    /// Amplitude maximising p_e at the readout start, rad/s.
    pub amplitude: f64,
    pub p_e_max: f64,
    /// A_π of the ½ΔV[1 − cos(πA/A_π)] fit to the sweep.
    pub fitted_amplitude: f64,
    pub sweep: Vec<(f64, f64)>,
}

/// p_e at the start of the readout after one resonant Gaussian pulse.
fn pulse_response(setup: &SimulationSetup, hilbert: HilbertSpec, width: f64, amplitude: f64) -> Result<f64> {
    let mut s = setup.clone();
    s.hilbert = hilbert;
    let model = s.model(0.0)?;
    let gen = model.generator(0.0);
    let dt = s.evolve.dt;
    let pulse = GaussianPulse {
        center: 0.0,
        width,
        amplitude,
    };
    let readout = pulse.end() + s.timing.readout_gap;
    let schedule = PulseSchedule::new(pulse.start(), readout)?.with(Pulse::Qubit(pulse))?;
    let k0 = lattice_index(pulse.start(), 0.0, dt)?;
    let k1 = lattice_index(readout, 0.0, dt)?;
    let rho = DensityMatrix::thermal_qubit_vacuum(hilbert, s.rates.n_q_th)?;
    let mut x = vectorize(rho.matrix());
    let mut integ = Integrator::new(&gen, &schedule, s.evolve)?;
    integ.run(&mut x, pulse.start(), k0, (k1 - k0) as usize, |_, _| {})?;
    Ok(populations(&x, hilbert.dim(), hilbert.n_m_levels, readout).p_e)
}

/// Sweeps the amplitude of a single pulse of Gaussian width `width` over
/// 0.5–1.5 × π/(2·width) and refines the maximum of p_e by golden section.
///
/// Readout errors do not enter: p_e is read at the start of the readout pulse.
pub fn calibrate_pi_pulse(setup: &SimulationSetup, width: f64) -> Result<PiCalibration> {
    if !(width > 0.0) {
        return Err(Error::invalid("width", "must be positive"));
    }
    // Without a magnon drive or thermal magnons the mode stays in vacuum.
    let hilbert = if setup.rates.n_m_th == 0.0 {
        HilbertSpec::new(setup.hilbert.n_q_levels, 2)?
    } else {
        setup.hilbert
    };
    let nominal = PI / (2.0 * width);
    let (lo, hi) = (0.5 * nominal, 1.5 * nominal);
    let amps: Vec<f64> = (0..PI_SWEEP_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (PI_SWEEP_POINTS - 1) as f64)
        .collect();
    let sweep: Vec<(f64, f64)> = amps
        .par_iter()
        .map(|&a| pulse_response(setup, hilbert, width, a).map(|p| (a, p)))
        .collect::<Result<_>>()?;
    let best = (0..sweep.len())
        .max_by(|&a, &b| sweep[a].1.total_cmp(&sweep[b].1))
        .expect("nonempty sweep");
    if best == 0 || best + 1 == sweep.len() {
        return Err(Error::NoMaximum { lo, hi });
    }

    let f = |a: f64| pulse_response(setup, hilbert, width, a);
    let (mut a, mut b) = (sweep[best - 1].0, sweep[best + 1].0);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a) > 1e-7 * nominal {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let amplitude = 0.5 * (a + b);
    let p_e_max = f(amplitude)?;

    let x: Vec<f64> = sweep.iter().map(|s| s.0).collect();
    let y: Vec<f64> = sweep.iter().map(|s| s.1).collect();
    let fit = fit_least_squares(Model::PiCal, &x, &y, &[p_e_max, amplitude], &FitOptions::default())?;
    Ok(PiCalibration {
        amplitude,
        p_e_max,
        fitted_amplitude: fit.params[1],
        sweep,
    })
}

/// Fitted T₂* target for the simulated Ramsey decay.
pub const T2_TARGET: f64 = 0.89 * US;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingTuning {
    pub gamma_phi: f64,
    pub t2_fit: f64,
    pub iterations: usize,
}

/// Undriven Ramsey record at Δ_s/2π = 1 MHz, τ from 20 ns to 4 µs, fitted
/// to offset + a·cos(Δτ)e^{−τ/T₂*}.
pub fn fitted_t2(setup: &SimulationSetup) -> Result<f64> {
    let mut s = setup.clone();
    s.hilbert = HilbertSpec::new(setup.hilbert.n_q_levels, 2)?;
    let delta = mhz(1.0);
    let taus: Vec<f64> = (1..=200).map(|k| k as f64 * 20.0 * NS).collect();
    let rec = simulate_ramsey(&s, &taus, delta, 0.0)?;
    let p = rec.p_ideal();
    let init = [delta, T2_TARGET, 0.4, 0.5];
    let fit = fit_least_squares(Model::Ramsey, &taus, &p, &init, &FitOptions::default())?;
    Ok(fit.params[1])
}

/// Secant search on γ_φ so the fitted T₂* matches `target` to 10⁻⁴.
/// Starts from the rate already in `setup`.
pub fn tune_dephasing(setup: &SimulationSetup, target: f64) -> Result<DephasingTuning> {
    let eval = |g: f64| -> Result<f64> {
        let mut s = setup.clone();
        s.rates.gamma_phi = g;
        Ok(fitted_t2(&s)? - target)
    };
    let mut g0 = setup.rates.gamma_phi.max(1e3);
    let mut f0 = eval(g0)?;
    let mut g1 = g0 * 1.05;
    let mut f1 = eval(g1)?;
    for it in 0..30 {
        if f1.abs() < 1e-4 * target {
            return Ok(DephasingTuning {
                gamma_phi: g1,
                t2_fit: f1 + target,
                iterations: it + 2,
            });
        }
        if f1 == f0 {
            break;
        }
        let g2 = (g1 - f1 * (g1 - g0) / (f1 - f0)).max(0.0);
        g0 = g1;
        f0 = f1;
        g1 = g2;
        f1 = eval(g1)?;
    }
    Err(Error::NotConverged {
        what: "dephasing tuning",
        iterations: 30,
        residual: f1,
    })
}

/// Sweep and fit settings for the magnon-population calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnonCalibrationOptions {
    pub delta_s: f64,
    pub tau_max: f64,
    pub dtau: f64,
    /// Relative tolerance on the fitted n̄.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub zero_pad: usize,
}

impl Default for MagnonCalibrationOptions {
    fn default() -> Self {
        Self {
            delta_s: mhz(-4.0),
            tau_max: 4.0 * US,
            dtau: 40.0 * NS,
            tolerance: 0.01,
            max_iterations: 12,
            zero_pad: 1,
        }
    }
}

impl MagnonCalibrationOptions {
    pub fn taus(&self) -> Vec<f64> {
        let n = (self.tau_max / self.dtau).round() as usize;
        (0..=n).map(|k| k as f64 * self.dtau).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCalibration {
    pub fit: CalibrationFit,
    pub views: PopulationViews,
    pub record: RamseyRecord,
}

/// Simulates the calibration Ramsey record at drive `omega_d` and fits the
/// multi-Fock spectrum with γ_q and Δ_d held fixed.
pub fn fit_drive_spectrum(setup: &SimulationSetup, omega_d: f64, opts: &MagnonCalibrationOptions) -> Result<SpectrumCalibration> {
    let taus = opts.taus();
    let record = simulate_ramsey(setup, &taus, opts.delta_s, omega_d)?;
    let so = SpectrumOptions {
        zero_pad: opts.zero_pad,
        demean: true,
    };
    let spectrum = spectrum_from_ramsey(&taus, &record.p_measured(), so)?
        .half(opts.delta_s)
        .window(opts.delta_s.abs() + mhz(11.0));
    let fixed = FixedLinewidths {
        gamma_q: setup.params.gamma_q,
        delta_d: setup.params.delta_d,
    };
    let (fit, _) = fit_calibration_spectrum(&spectrum, fixed)?;
    Ok(SpectrumCalibration {
        fit,
        views: record.population_views(),
        record,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagnonCalibration {
    pub omega_d: f64,
    /// Ω_d/√n̄, so that n̄ = (Ω_d/λ)².
    pub lambda: f64,
    pub target: f64,
    /// Last spectrum fit; absent for a zero target.
    pub result: Option<SpectrumCalibration>,
    /// (Ω_d, fitted n̄) at every evaluation.
    pub history: Vec<(f64, f64)>,
}

/// Ω_d at which a coherent drive reaches n̄ in the uncoupled mode.
pub fn linear_response_drive(setup: &SimulationSetup, n_bar: f64) -> f64 {
    let g = 0.5 * setup.rates.gamma_m;
    n_bar.sqrt() * (g * g + setup.params.delta_d.powi(2)).sqrt()
}

/// Secant iteration on Ω_d until the spectrum fit returns `target` within
/// the relative tolerance.
pub fn calibrate_magnon_drive(setup: &SimulationSetup, target: f64, opts: &MagnonCalibrationOptions) -> Result<MagnonCalibration> {
    if !(target >= 0.0) {
        return Err(Error::invalid("target", "population must be nonnegative"));
    }
    if target == 0.0 {
        return Ok(MagnonCalibration {
            omega_d: 0.0,
            lambda: 0.0,
            target,
            result: None,
            history: Vec::new(),
        });
    }
    let mut history = Vec::new();
    let mut eval = |w: f64| -> Result<SpectrumCalibration> {
        let r = fit_drive_spectrum(setup, w, opts)?;
        history.push((w, r.fit.n_bar));
        Ok(r)
    };
    let mut w0 = linear_response_drive(setup, target);
    let mut r0 = eval(w0)?;
    // Quadratic law n̄ ∝ Ω_d² for the second point.
    let mut w1 = if r0.fit.n_bar > 0.0 {
        w0 * (target / r0.fit.n_bar).sqrt()
    } else {
        1.2 * w0
    };
    let mut r1 = eval(w1)?;
    for _ in 0..opts.max_iterations {
        let err = r1.fit.n_bar - target;
        if err.abs() <= opts.tolerance * target {
            return Ok(MagnonCalibration {
                omega_d: w1,
                lambda: w1 / target.sqrt(),
                target,
                result: Some(r1),
                history,
            });
        }
        // Secant in √n̄, which is close to linear in Ω_d.
        let (s0, s1) = (r0.fit.n_bar.max(0.0).sqrt(), r1.fit.n_bar.max(0.0).sqrt());
        let w2 = if s1 != s0 {
            w1 + (target.sqrt() - s1) * (w1 - w0) / (s1 - s0)
        } else {
            w1 * (target / r1.fit.n_bar.max(1e-6)).sqrt()
        };
        let w2 = w2.clamp(0.25 * w1, 4.0 * w1);
        w0 = w1;
        r0 = r1;
        w1 = w2;
        r1 = eval(w1)?;
    }
    Err(Error::NotConverged {
        what: "magnon drive calibration",
        iterations: opts.max_iterations,
        residual: r1.fit.n_bar - target,
    })
}

const FIXED_POINT_STEPS: usize = 8;

/// Steady-state inversion of n̄(Ω_d) for one frame detuning.
#[derive(Debug, Clone)]
pub struct SteadyStateDriveMap {
    model: crate::model::LindbladModel,
    /// n̄ per Ω_d² at weak drive.
    pub kappa: f64,
}

impl SteadyStateDriveMap {
    pub fn new(setup: &SimulationSetup, delta_s: f64) -> Result<Self> {
        let model = setup.model(delta_s)?;
        let probe = linear_response_drive(setup, 1e-3);
        let n = steady_magnon_population(&model, probe)?;
        if !(n > 0.0) {
            return Err(Error::Degenerate("magnon drive produces no population".into()));
        }
        Ok(Self {
            model,
            kappa: n / (probe * probe),
        })
    }

    pub fn population(&self, omega_d: f64) -> Result<f64> {
        steady_magnon_population(&self.model, omega_d)
    }

    /// Ω_d ≥ 0 whose steady state holds `n_bar` magnons, to 10⁻⁹ relative.
    pub fn drive_for(&self, n_bar: f64) -> Result<f64> {
        if !(n_bar >= 0.0) {
            return Err(Error::invalid("n_bar", "must be nonnegative"));
        }
        if n_bar == 0.0 {
            return Ok(0.0);
        }
        // n̄ ∝ Ω_d² up to a slow dynamical detuning, so rescale a few times first.
        let mut w = (n_bar / self.kappa).sqrt();
        for _ in 0..FIXED_POINT_STEPS {
            let n = self.population(w)?;
            if (n - n_bar).abs() <= 1e-9 * n_bar {
                return Ok(w);
            }
            if !(n > 0.0) {
                break;
            }
            w *= (n_bar / n).sqrt();
        }
        let mut failure = None;
        let root = bracketed_root(
            |x| match self.population(x) {
                Ok(v) => v - n_bar,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            0.5 * w,
            2.0 * w,
            1e-10,
        );
        match (root, failure) {
            (_, Some(e)) => Err(e),
            (r, None) => Ok(r?),
        }
    }
}
