//! Simulated Ramsey sequences with a continuously driven Kittel mode.

use crate::error::{Error, Result};
use crate::evolve::{evolve, lattice_index, populations, EvolveOptions, Integrator, PopulationRecord};
use crate::model::{ChannelRates, EffectiveHamiltonianSpec, LindbladModel, LAMBDA_EF_DEFAULT};
use crate::schedule::{GaussianPulse, MagnonDrive, Pulse, PulseSchedule, PULSE_CUTOFF};
use crate::sparse::vectorize;
use crate::steady::steady_state;
use magnon_core::units::{NS, US};
use magnon_core::{DensityMatrix, DeviceParams, HilbertSpec};
use magnon_inference::ReadoutAnchors;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Pulse and readout timing. Time zero is the centre of the first qubit pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceTiming {
    /// Gaussian width τ_s of every qubit pulse.
    pub pulse_width: f64,
    /// Simulation start; the magnon drive is on from here.
    pub sim_start: f64,
    /// From the end of the last qubit pulse to the start of the readout pulse.
    pub readout_gap: f64,
    /// From the start of the readout pulse to the effective readout instant.
    pub readout_offset: f64,
}

impl Default for SequenceTiming {
    fn default() -> Self {
        Self {
            pulse_width: 12.0 * NS,
            sim_start: -1.5 * US,
            readout_gap: 12.0 * NS,
            readout_offset: 32.0 * NS,
        }
    }
}

impl SequenceTiming {
    pub fn half_length(&self) -> f64 {
        PULSE_CUTOFF * self.pulse_width
    }

    /// Readout instant for a last pulse centred at `center`.
    pub fn readout_after(&self, center: f64) -> f64 {
        center + self.half_length() + self.readout_gap + self.readout_offset
    }
}

/// How the state at the start of the first qubit pulse is prepared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preparation {
    /// Thermal qubit ⊗ magnon vacuum at `sim_start`, then the drive is held on.
    Ramp,
    /// Steady state of the drive, placed directly at the first pulse.
    SteadyState,
}

/// Everything a simulated protocol needs besides its sweep grids.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSetup {
    pub params: DeviceParams,
    pub hilbert: HilbertSpec,
    pub lambda_ef: f64,
    pub rates: ChannelRates,
    pub timing: SequenceTiming,
    pub anchors: ReadoutAnchors,
    /// Peak amplitude of a π pulse, rad/s.
    pub pi_amplitude: f64,
    pub preparation: Preparation,
    pub evolve: EvolveOptions,
}

impl SimulationSetup {
    /// Device parameters with Λ_ef = 8.65, textbook dephasing and the area-π amplitude.
    pub fn new(params: DeviceParams, hilbert: HilbertSpec) -> Self {
        let timing = SequenceTiming::default();
        Self {
            rates: ChannelRates::from_params(&params),
            anchors: ReadoutAnchors {
                p_e_ground: params.p_e_ground,
                p_e_excited: params.p_e_excited,
            },
            pi_amplitude: PI / (2.0 * timing.pulse_width),
            lambda_ef: LAMBDA_EF_DEFAULT,
            preparation: Preparation::Ramp,
            evolve: EvolveOptions::default(),
            params,
            hilbert,
            timing,
        }
    }

    pub fn model(&self, delta_s: f64) -> Result<LindbladModel> {
        let h = EffectiveHamiltonianSpec::from_params(&self.params, self.hilbert, delta_s, self.lambda_ef);
        LindbladModel::new(h, self.rates)
    }

    pub fn initial_state(&self) -> Result<DensityMatrix> {
        Ok(DensityMatrix::thermal_qubit_vacuum(self.hilbert, self.rates.n_q_th)?)
    }

    fn pulse(&self, center: f64, amplitude: f64) -> GaussianPulse {
        GaussianPulse {
            center,
            width: self.timing.pulse_width,
            amplitude,
        }
    }
}

/// One sensing time of a Ramsey record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseyPoint {
    pub tau: f64,
    /// (p_g, p_e, p_f) at the readout instant.
    pub populations: [f64; 3],
    /// p_e + p_f.
    pub p_ideal: f64,
    /// After the readout-error map.
    pub p_measured: f64,
    /// Σ n̄_m(mΔt) for 0 ≤ mΔt ≤ τ.
    pub n_sum: f64,
    /// Number of samples in `n_sum`.
    pub n_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamseyRecord {
    pub delta_s: f64,
    pub omega_d: f64,
    pub points: Vec<RamseyPoint>,
    /// n̄_m at the start of the first qubit pulse.
    pub n_ss: f64,
}

impl RamseyRecord {
    pub fn taus(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.tau).collect()
    }

    pub fn p_measured(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p_measured).collect()
    }

    pub fn p_ideal(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p_ideal).collect()
    }

    pub fn population_views(&self) -> PopulationViews {
        let sum: f64 = self.points.iter().map(|p| p.n_sum).sum();
        let count: usize = self.points.iter().map(|p| p.n_count).sum();
        PopulationViews {
            n_ss: self.n_ss,
            n_ta: if count == 0 { 0.0 } else { sum / count as f64 },
        }
    }
}

/// Magnon population just before the sequence and averaged over the sensing windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationViews {
    pub n_ss: f64,
    pub n_ta: f64,
}

/// Time average of n̄_m(mΔt) over each window 0 ≤ m ≤ M_ℓ, pooled over windows.
///
/// `n_of_t[m]` is the population at t = mΔt; `window_steps` holds each M_ℓ.
pub fn magnon_population_views(n_ss: f64, n_of_t: &[f64], window_steps: &[usize]) -> Result<PopulationViews> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for &m in window_steps {
        if m >= n_of_t.len() {
            return Err(Error::invalid("window_steps", "window longer than the trajectory"));
        }
        sum += n_of_t[..=m].iter().sum::<f64>();
        count += m + 1;
    }
    Ok(PopulationViews {
        n_ss,
        n_ta: if count == 0 { 0.0 } else { sum / count as f64 },
    })
}

/// Populations sampled every `sample` seconds through one Ramsey sequence,
/// from the state preparation to the readout instant.
pub fn ramsey_trajectory(
    setup: &SimulationSetup,
    tau: f64,
    delta_s: f64,
    omega_d: f64,
    sample: f64,
) -> Result<Vec<PopulationRecord>> {
    if !(tau >= 0.0) {
        return Err(Error::Schedule(format!("negative sensing time {tau:e} s")));
    }
    if !(sample > 0.0) {
        return Err(Error::invalid("sample", "must be positive"));
    }
    let timing = setup.timing;
    let model = setup.model(delta_s)?;
    let t_r = tau + timing.readout_after(0.0);
    let (start, rho0) = match setup.preparation {
        Preparation::Ramp => (timing.sim_start, setup.initial_state()?),
        Preparation::SteadyState => (-timing.half_length(), steady_state(&model, omega_d)?),
    };
    let amp = 0.5 * setup.pi_amplitude;
    let schedule = PulseSchedule::new(start, t_r)?
        .with(Pulse::Magnon(MagnonDrive {
            start,
            end: t_r,
            amplitude: omega_d,
        }))?
        .with(Pulse::Qubit(setup.pulse(0.0, amp)))?
        .with(Pulse::Qubit(setup.pulse(tau, amp)))?;
    let n = ((t_r - start) / sample).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| start + k as f64 * sample).collect();
    if t_r - times[n] > 1e-9 * sample {
        times.push(t_r);
    }
    Ok(evolve(&rho0, &model, &schedule, &times, &setup.evolve)?.records)
}

/// Ramsey sequence with two π/2 pulses separated by each τ, read out at
/// τ + [`SequenceTiming::readout_after`].
///
/// One trunk trajectory runs through the first pulse and free evolution;
/// each τ branches off it just before its second pulse. Sensing times must be
/// nonnegative multiples of the time step.
pub fn simulate_ramsey(setup: &SimulationSetup, taus: &[f64], delta_s: f64, omega_d: f64) -> Result<RamseyRecord> {
    if taus.is_empty() {
        return Err(Error::invalid("taus", "empty sensing-time grid"));
    }
    let dt = setup.evolve.dt;
    let timing = setup.timing;
    let half = timing.half_length();
    let k_half = lattice_index(half, 0.0, dt)?;
    let k_start = lattice_index(timing.sim_start, 0.0, dt)?;
    if timing.sim_start > -half {
        return Err(Error::Schedule("simulation starts after the first pulse".into()));
    }
    let mut k_tau = Vec::with_capacity(taus.len());
    for &tau in taus {
        if !(tau >= 0.0) {
            return Err(Error::Schedule(format!("negative sensing time {tau:e} s")));
        }
        k_tau.push(lattice_index(tau, 0.0, dt)?);
    }
    let k_readout_gap = lattice_index(timing.readout_after(0.0), 0.0, dt)?;

    let model = setup.model(delta_s)?;
    let gen = model.generator(omega_d);
    let d = model.dim();
    let nm = setup.hilbert.n_m_levels;
    let amp = 0.5 * setup.pi_amplitude;
    let t_of = |k: i64| k as f64 * dt;
    let k_max = *k_tau.iter().max().expect("nonempty");
    let horizon = t_of(k_max + k_readout_gap);
    let drive = Pulse::Magnon(MagnonDrive {
        start: timing.sim_start,
        end: horizon,
        amplitude: omega_d,
    });
    let trunk_schedule = PulseSchedule::new(timing.sim_start, horizon)?
        .with(drive)?
        .with(Pulse::Qubit(setup.pulse(0.0, amp)))?;

    // Prepare the state at the start of the first pulse.
    let mut x = match setup.preparation {
        Preparation::Ramp => {
            let mut x = vectorize(setup.initial_state()?.matrix());
            let mut integ = Integrator::new(&gen, &trunk_schedule, setup.evolve)?;
            integ.run(&mut x, timing.sim_start, k_start, (-k_half - k_start) as usize, |_, _| {})?;
            x
        }
        Preparation::SteadyState => vectorize(steady_state(&model, omega_d)?.matrix()),
    };
    let n_ss = populations(&x, d, nm, -half).n_m;
    let at_first_pulse = x.clone();

    // Trunk: record Σ n̄_m from t = 0 and keep a checkpoint at each second-pulse start.
    let mut checkpoints: Vec<i64> = k_tau.iter().filter(|&&k| k >= 2 * k_half).map(|&k| k - k_half).collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let last = checkpoints.last().copied().unwrap_or(-k_half);
    let mut prefix = vec![0.0f64; (last.max(0) + 1) as usize];
    let mut saved: Vec<(i64, Vec<Complex64>)> = Vec::with_capacity(checkpoints.len());
    {
        let mut integ = Integrator::new(&gen, &trunk_schedule, setup.evolve)?;
        let mut running = 0.0;
        let mut next = 0usize;
        integ.run(&mut x, -half, -k_half, (last + k_half) as usize, |k, state| {
            if k >= 0 {
                running += populations(state, d, nm, 0.0).n_m;
                prefix[k as usize] = running;
            }
            if next < checkpoints.len() && checkpoints[next] == k {
                saved.push((k, state.to_vec()));
                next += 1;
            }
        })?;
    }

    let points: Vec<RamseyPoint> = taus
        .par_iter()
        .zip(k_tau.par_iter())
        .map(|(&tau, &kt)| -> Result<RamseyPoint> {
            let t_r = t_of(kt + k_readout_gap);
            let schedule = PulseSchedule::new(timing.sim_start, t_r.max(horizon))?
                .with(drive)?
                .with(Pulse::Qubit(setup.pulse(0.0, amp)))?
                .with(Pulse::Qubit(setup.pulse(tau, amp)))?;
            let mut integ = Integrator::new(&gen, &schedule, setup.evolve)?;
            let (k0, mut state, mut n_sum) = if kt >= 2 * k_half {
                let cp = kt - k_half;
                let idx = saved.binary_search_by_key(&cp, |(k, _)| *k).expect("checkpoint stored");
                (cp, saved[idx].1.clone(), prefix[cp as usize])
            } else {
                (-k_half, at_first_pulse.clone(), 0.0)
            };
            let steps = (kt + k_readout_gap - k0) as usize;
            integ.run(&mut state, t_of(k0), k0, steps, |k, s| {
                if (0..=kt).contains(&k) {
                    n_sum += populations(s, d, nm, 0.0).n_m;
                }
            })?;
            let pop = populations(&state, d, nm, t_r);
            let p_ideal = pop.p_e + pop.p_f;
            Ok(RamseyPoint {
                tau,
                populations: [pop.p_g, pop.p_e, pop.p_f],
                p_ideal,
                p_measured: setup.anchors.map(p_ideal),
                n_sum,
                n_count: (kt + 1) as usize,
            })
        })
        .collect::<Result<_>>()?;

    Ok(RamseyRecord {
        delta_s,
        omega_d,
        points,
        n_ss,
    })
}
