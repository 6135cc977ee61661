use magnon_core::units::{mhz, NS, US};
use magnon_core::{CMatrix, DensityMatrix, DeviceParams, HilbertSpec};
use magnon_dynamics::calibrate::calibrate_pi_pulse;
use magnon_dynamics::schedule::PULSE_CUTOFF;
use magnon_dynamics::sequence::SimulationSetup;
use magnon_dynamics::{
    evolve, gaussian_envelope, ChannelRates, EffectiveHamiltonianSpec, EvolveOptions, GaussianPulse, LindbladModel,
    MagnonDrive, Pulse, PulseSchedule,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn spec(hilbert: HilbertSpec) -> EffectiveHamiltonianSpec {
    EffectiveHamiltonianSpec {
        hilbert,
        delta_s: 0.0,
        delta_d: 0.0,
        alpha: mhz(-122.61),
        chi: mhz(-1.762),
        lambda_ef: 0.0,
    }
}

fn grid(t_end: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

#[test]
fn free_decay_follows_exponential() {
    let hilbert = HilbertSpec::new(2, 2).unwrap();
    let gamma_1 = 1.0 / (0.801 * US);
    let rates = ChannelRates {
        gamma_1,
        ..ChannelRates::closed()
    };
    let model = LindbladModel::new(spec(hilbert), rates).unwrap();
    let schedule = PulseSchedule::new(0.0, 2.0 * US).unwrap();
    let rho0 = DensityMatrix::basis(hilbert, 1, 0).unwrap();
    // Off-lattice grid points exercise the shortened final step.
    let mut times = grid(2.0 * US, 20);
    times.push(2.0 * US - 0.037 * NS);
    times.sort_by(f64::total_cmp);
    let traj = evolve(&rho0, &model, &schedule, &times, &EvolveOptions::default()).unwrap();
    for r in &traj.records {
        assert!((r.p_e - (-gamma_1 * r.t).exp()).abs() < 1e-6, "t = {:e}: {} vs {}", r.t, r.p_e, (-gamma_1 * r.t).exp());
    }
}

#[test]
fn closed_undriven_system_is_stationary() {
    let hilbert = HilbertSpec::new(3, 3).unwrap();
    let model = LindbladModel::new(spec(hilbert), ChannelRates::closed()).unwrap();
    let schedule = PulseSchedule::new(0.0, 1.0 * US).unwrap();
    // Superpositions of energy eigenstates pick up phases, so use a diagonal state.
    let mut m = CMatrix::zeros(9, 9);
    for (i, w) in [0.5, 0.2, 0.1, 0.1, 0.05, 0.05].iter().enumerate() {
        m[(i, i)] = Complex64::new(*w, 0.0);
    }
    let rho0 = DensityMatrix::new(m).unwrap();
    let traj = evolve(&rho0, &model, &schedule, &[0.5 * US, 1.0 * US], &EvolveOptions::default()).unwrap();
    for s in &traj.states {
        assert!(s.trace_distance(&rho0) < 1e-12);
    }
}

#[test]
fn resonant_drive_fills_mode_to_linear_response() {
    let hilbert = HilbertSpec::new(2, 10).unwrap();
    let gamma_m = mhz(1.567);
    let rates = ChannelRates {
        gamma_m,
        ..ChannelRates::closed()
    };
    let model = LindbladModel::new(spec(hilbert), rates).unwrap();
    let n_target: f64 = 0.5;
    let omega_d = n_target.sqrt() * 0.5 * gamma_m;
    let t_end = 40.0 / gamma_m;
    let t_end = (t_end / NS).round() * NS;
    let schedule = PulseSchedule::new(0.0, t_end)
        .unwrap()
        .with(Pulse::Magnon(MagnonDrive {
            start: 0.0,
            end: t_end,
            amplitude: omega_d,
        }))
        .unwrap();
    let rho0 = DensityMatrix::basis(hilbert, 0, 0).unwrap();
    let traj = evolve(&rho0, &model, &schedule, &[t_end], &EvolveOptions::default()).unwrap();
    let n = traj.records[0].n_m;
    assert!((n - n_target).abs() < 1e-6 * n_target.max(1.0) + 2e-6, "n = {n}");
}

#[test]
fn envelope_peak_area_and_half_width() {
    let (c, w, a) = (3.0 * NS, 12.0 * NS, 2.5e8);
    assert_eq!(gaussian_envelope(c, c, w, a), a);
    // Composite Simpson over ±8 widths; the tails beyond are below e^{-200}.
    let n = 20_000;
    let (lo, hi) = (c - 8.0 * w, c + 8.0 * w);
    let h = (hi - lo) / n as f64;
    let mut sum = gaussian_envelope(lo, c, w, a) + gaussian_envelope(hi, c, w, a);
    for k in 1..n {
        let t = lo + k as f64 * h;
        sum += if k % 2 == 1 { 4.0 } else { 2.0 } * gaussian_envelope(t, c, w, a);
    }
    let area = sum * h / 3.0;
    assert!((area - a * w).abs() < 1e-10 * a * w, "area {area:e}");
    let half = w * (std::f64::consts::LN_2 / std::f64::consts::PI).sqrt();
    assert!((gaussian_envelope(c + half, c, w, a) - 0.5 * a).abs() < 1e-12 * a);

    let pulse = GaussianPulse {
        center: c,
        width: w,
        amplitude: a,
    };
    assert_eq!(pulse.envelope(c + PULSE_CUTOFF * w + 1e-12), 0.0);
    assert!(pulse.envelope(c + PULSE_CUTOFF * w - 1e-12) > 0.0);
}

fn rabi_setup(levels: usize, rates: ChannelRates) -> SimulationSetup {
    let mut s = SimulationSetup::new(DeviceParams::reference(), HilbertSpec::new(levels, 2).unwrap());
    s.rates = rates;
    s.lambda_ef = 0.0;
    s
}

#[test]
fn ideal_two_level_pi_pulse_inverts() {
    let s = rabi_setup(2, ChannelRates::closed());
    for width in [12.0 * NS, 200.0 * NS] {
        let cal = calibrate_pi_pulse(&s, width).unwrap();
        let nominal = std::f64::consts::PI / (2.0 * width);
        assert!((cal.p_e_max - 1.0).abs() < 1e-6, "width {width:e}: {}", cal.p_e_max);
        // The truncated tails carry 2·10⁻⁴ of the area.
        assert!((cal.amplitude / nominal - 1.0).abs() < 1e-3, "{} vs {nominal}", cal.amplitude);
    }
}

#[test]
fn relaxation_caps_pi_pulse_fidelity() {
    let rates = ChannelRates {
        gamma_1: 1.0 / (0.80 * US),
        ..ChannelRates::closed()
    };
    let s = rabi_setup(2, rates);
    for width in [12.0 * NS, 200.0 * NS] {
        let cal = calibrate_pi_pulse(&s, width).unwrap();
        assert!(cal.p_e_max < 1.0 - 1e-4, "width {width:e}: {}", cal.p_e_max);
    }
    let long = calibrate_pi_pulse(&s, 200.0 * NS).unwrap().p_e_max;
    let short = calibrate_pi_pulse(&s, 12.0 * NS).unwrap().p_e_max;
    assert!(long < short);
}

#[test]
fn short_pulse_leaks_into_f() {
    let hilbert = HilbertSpec::new(3, 2).unwrap();
    let model = LindbladModel::new(spec(hilbert), ChannelRates::closed()).unwrap();
    let width = 12.0 * NS;
    let half = PULSE_CUTOFF * width;
    let schedule = PulseSchedule::new(-half, half)
        .unwrap()
        .with(Pulse::Qubit(GaussianPulse {
            center: 0.0,
            width,
            amplitude: std::f64::consts::PI / (2.0 * width),
        }))
        .unwrap();
    let rho0 = DensityMatrix::basis(hilbert, 0, 0).unwrap();
    let traj = evolve(&rho0, &model, &schedule, &[half], &EvolveOptions::default()).unwrap();
    let p_f = traj.records[0].p_f;
    assert!(p_f > 1e-6 && p_f < 0.02, "p_f = {p_f:e}");
}

/// Levels ordered so every decay lowers ⟨H₀⟩ for a two-level qubit and four magnon levels.
fn dissipative_ladder() -> LindbladModel {
    let hilbert = HilbertSpec::new(2, 4).unwrap();
    let h = EffectiveHamiltonianSpec {
        hilbert,
        delta_s: mhz(10.0),
        delta_d: mhz(3.0),
        alpha: mhz(-122.61),
        chi: mhz(-1.0),
        lambda_ef: 0.0,
    };
    let rates = ChannelRates {
        gamma_1: 1.0 / (0.8 * US),
        gamma_phi: 0.5e6,
        n_q_th: 0.0,
        gamma_m: mhz(1.567),
        n_m_th: 0.0,
    };
    LindbladModel::new(h, rates).unwrap()
}

fn random_state(amps: &[(f64, f64)], mix: f64) -> DensityMatrix {
    let d = amps.len();
    let psi: Vec<Complex64> = amps.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut m = CMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj() / (norm * norm) * (1.0 - mix));
    for i in 0..d {
        m[(i, i)] += Complex64::new(mix / d as f64, 0.0);
    }
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    DensityMatrix::new(m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trajectories_stay_physical(
        amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
        mix in 0.0f64..0.5,
        qubit_amp in 0.0f64..3e8,
        magnon_amp in 0.0f64..5e6,
        lambda in 0.0f64..10.0,
    ) {
        prop_assume!(amps.iter().any(|&(a, b)| a.abs() + b.abs() > 0.1));
        let hilbert = HilbertSpec::new(3, 4).unwrap();
        let mut h = spec(hilbert);
        h.lambda_ef = lambda;
        h.delta_s = mhz(1.0);
        let p = DeviceParams::reference();
        let model = LindbladModel::new(h, ChannelRates::from_params(&p)).unwrap();
        let schedule = PulseSchedule::new(0.0, 200.0 * NS).unwrap()
            .with(Pulse::Magnon(MagnonDrive { start: 0.0, end: 200.0 * NS, amplitude: magnon_amp })).unwrap()
            .with(Pulse::Qubit(GaussianPulse { center: 40.0 * NS, width: 12.0 * NS, amplitude: qubit_amp })).unwrap();
        let rho0 = random_state(&amps, mix);
        let traj = evolve(&rho0, &model, &schedule, &grid(200.0 * NS, 10), &EvolveOptions::default()).unwrap();
        for s in &traj.states {
            prop_assert!(s.check().is_ok(), "{:?}", s.check());
        }
    }

    #[test]
    fn undriven_energy_never_increases(
        amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8),
        mix in 0.0f64..0.5,
    ) {
        prop_assume!(amps.iter().any(|&(a, b)| a.abs() + b.abs() > 0.1));
        let model = dissipative_ladder();
        let schedule = PulseSchedule::new(0.0, 2.0 * US).unwrap();
        let rho0 = random_state(&amps, mix);
        let times: Vec<f64> = (1..=200).map(|k| k as f64 * 10.0 * NS).collect();
        let traj = evolve(&rho0, &model, &schedule, &times, &EvolveOptions::default()).unwrap();
        let scale = mhz(10.0);
        let mut last = rho0.expect(model.h0());
        for s in &traj.states {
            let e = s.expect(model.h0());
            prop_assert!(e <= last + 1e-9 * scale, "{e} > {last}");
            last = e;
        }
    }
}
