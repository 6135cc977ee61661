//! One function per registered experiment. Sweep points run on the rayon
//! pool; results are collected in grid order before any table is built.

use crate::config::{DriveMapKind, ExperimentConfig, ExperimentId};
use crate::error::Result;
use crate::output::{Bundle, Cell, Table};
use crate::pipeline::{prepare, tau_from_us, us_from_lattice, Prepared};
use magnon_core::analytic::{
    efficiency, field_sensitivity, qubit_linewidth_excess, ramsey_pe, ramsey_pe_shifted, readout_map, sensitivity,
    DispersiveAux, SensitivityModel,
};
use magnon_core::hybrid::{diagonalize_at_resonance, excitation_strengths, g_qm_perturbative, purcell_rate, HybridModel};
use magnon_core::units::{mhz, to_mhz, US};
use magnon_core::{DeviceParams, HilbertSpec};
use magnon_dynamics::calibrate::MagnonCalibrationOptions;
use magnon_dynamics::sensing::{default_targets, drives_for, monte_carlo_sensitivity, numerical_sensitivity};
use magnon_dynamics::{ramsey_trajectory, sensitivity_protocol, Preparation, SensitivityPoint, SimulationSetup};
use magnon_inference::fit::{Model, MULTI_FOCK_N_MAX};
use magnon_inference::shots::sample_shots;
use magnon_inference::spectrum::{spectrum_from_ramsey, SpectrumOptions};
use magnon_inference::{sensitivity_from_record, ReadoutAnchors};
use rayon::prelude::*;

/// Runs one experiment in memory.
pub fn run(cfg: &ExperimentConfig) -> Result<Bundle> {
    match cfg.id {
        ExperimentId::Fig1dSensitivityVsGammaM => fig1d(cfg),
        ExperimentId::Fig2SignalNoise => fig2(cfg),
        ExperimentId::Fig3TauSweep => fig3(cfg),
        ExperimentId::Fig4DetuningSweep => fig4(cfg),
        ExperimentId::S2ModelLadder => s2_ladder(cfg),
        ExperimentId::S1LinewidthOptimum => s1_optimum(cfg),
        ExperimentId::CharacterizationSuite => characterization(cfg),
    }
}

fn cartesian(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

fn argmin(x: &[f64], y: &[f64]) -> Option<f64> {
    (0..y.len())
        .filter(|&i| y[i].is_finite())
        .min_by(|&a, &b| y[a].total_cmp(&y[b]))
        .map(|i| x[i])
}

fn key(prefix: &str, chi: f64) -> String {
    format!("{prefix}_chi_{chi}_mhz")
}

fn fig1d(cfg: &ExperimentConfig) -> Result<Bundle> {
    let base = cfg.params.analytic_view();
    let tau = cfg.settings.tau_us * US;
    let chis = cfg.grid("chi_mhz");
    let gms = cfg.grid("gamma_m_mhz");
    let rows: Vec<[f64; 6]> = cartesian(chis, gms)
        .par_iter()
        .map(|&(chi, gm)| {
            let p = DeviceParams {
                chi_qm: mhz(chi),
                gamma_m: mhz(gm),
                ..base.clone()
            };
            let ana3 = sensitivity(SensitivityModel::Ana3, &p, tau, 0.0, p.delta_d)?;
            // The unit-SNR root has no solution once S exceeds its bracket.
            let ana1 = sensitivity(SensitivityModel::Ana1, &p, tau, 0.0, p.delta_d).map_or(f64::NAN, |r| r.value);
            let field = if ana1.is_finite() { field_sensitivity(ana1, &p)? } else { f64::NAN };
            Ok([chi, gm, ana3.eta, ana1, ana3.value, field])
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(
        "fig1d_sensitivity_vs_gamma_m",
        &["chi_mhz", "gamma_m_mhz", "eta", "sensitivity", "sensitivity_ana3", "field_sensitivity_t"],
    );
    rows.iter().for_each(|r| table.push_nums(r));
    let mut bundle = Bundle::default();
    for &chi in chis {
        let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r[0] == chi).map(|r| (r[1], r[3])).unzip();
        if let Some(g) = argmin(&x, &y) {
            bundle.results.insert(key("argmin_gamma_m_mhz", chi), g);
        }
    }
    bundle.results.insert("tau_us".into(), cfg.settings.tau_us);
    bundle.tables.push(table);
    Ok(bundle)
}

fn s1_optimum(cfg: &ExperimentConfig) -> Result<Bundle> {
    let chis = cfg.grid("chi_mhz");
    let gms = cfg.grid("gamma_m_mhz");
    let gamma_q = cfg.params.gamma_q;
    let n_bar = cfg.settings.n_bar;
    let rows: Vec<[f64; 4]> = cartesian(chis, gms)
        .iter()
        .map(|&(chi, gm)| {
            let aux = DispersiveAux::new(mhz(chi), mhz(gm), 0.0, 0.0)?;
            let excess = qubit_linewidth_excess(n_bar, &aux);
            Ok([chi, gm, to_mhz(gamma_q + excess), to_mhz(excess)])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(
        "s1_linewidth_optimum",
        &["chi_mhz", "gamma_m_mhz", "gamma_q0_mhz", "excess_mhz"],
    );
    rows.iter().for_each(|r| table.push_nums(r));
    let mut bundle = Bundle::default();
    for &chi in chis {
        let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r[0] == chi).map(|r| (r[1], -r[3])).unzip();
        if let Some(g) = argmin(&x, &y) {
            bundle.results.insert(key("argmax_gamma_m_mhz", chi), g);
        }
    }
    bundle.results.insert("n_bar".into(), n_bar);
    bundle.tables.push(table);
    Ok(bundle)
}

fn fig2(cfg: &ExperimentConfig) -> Result<Bundle> {
    let p = cfg.params.analytic_view();
    let tau = cfg.settings.tau_us * US;
    let aux = DispersiveAux::new(p.chi_qm, p.gamma_m, p.delta_d, 0.0)?;
    let gq = p.gamma_q;
    let contrast = p.p_e_excited - p.p_e_ground;
    let map = |x: f64| readout_map(x, p.p_e_ground, p.p_e_excited);
    let eff = efficiency(tau, 0.0, gq, &aux);
    let eta = eff.eta * contrast;
    let slope = eff.slope() * contrast;
    let p_ideal0 = ramsey_pe(tau, 0.0, gq);
    let p0 = map(p_ideal0);

    let mut signal = Table::new("fig2_signal", &["n_bar", "p_e", "p_e_linear"]);
    for &n in cfg.grid("n_bar") {
        signal.push_nums(&[n, map(ramsey_pe_shifted(n, tau, 0.0, gq, &aux)), p0 + slope * n]);
    }

    let anchors = ReadoutAnchors {
        p_e_ground: p.p_e_ground,
        p_e_excited: p.p_e_excited,
    };
    let record = sample_shots(p_ideal0, cfg.shots, anchors, p.tau_total, cfg.seed, 0)?;
    let rs = sensitivity_from_record(&record, eta)?;
    let mut allan = Table::new("fig2_allan", &["t_s", "xi_q", "xi_m", "xi_m_fit"]);
    for (t, d) in rs.allan.t.iter().zip(&rs.allan.deviation) {
        allan.push_nums(&[*t, *d, d / eta, rs.sensitivity / t.sqrt()]);
    }

    let mut bundle = Bundle::default();
    bundle.results.insert("eta".into(), eta);
    bundle.results.insert("p_e0".into(), p0);
    bundle.results.insert("xi_q_1s".into(), rs.xi_q_1s);
    bundle.results.insert("allan_slope".into(), rs.slope);
    bundle.results.insert("sensitivity".into(), rs.sensitivity);
    bundle
        .results
        .insert("sensitivity_ana3".into(), sensitivity(SensitivityModel::Ana3, &p, tau, 0.0, p.delta_d)?.value);
    bundle.streams.insert("shots".into(), 0);
    bundle.tables.push(signal);
    bundle.tables.push(allan);
    Ok(bundle)
}

/// Monte-Carlo Ξ_q(1 s) and S per point, stream `offset + index`.
fn monte_carlo(cfg: &ExperimentConfig, setup: &SimulationSetup, points: &[SensitivityPoint], offset: u64) -> Result<Vec<(f64, f64)>> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, pt)| {
            let mc = monte_carlo_sensitivity(setup, pt, cfg.shots, cfg.seed, offset + i as u64)?;
            Ok((mc.result.xi_q_1s, mc.result.sensitivity))
        })
        .collect()
}

fn fig3(cfg: &ExperimentConfig) -> Result<Bundle> {
    let prep = prepare(&cfg.params, &cfg.settings)?;
    let setup = &prep.setup;
    let taus: Vec<f64> = cfg.grid("tau_us").iter().map(|&t| tau_from_us(t)).collect();
    let targets = default_targets();
    let points = sensitivity_protocol(setup, &taus, 0.0, &targets, prep.map)?;
    let mc = monte_carlo(cfg, setup, &points, 0)?;

    let mut sweep = Table::new(
        "fig3_tau_sweep",
        &["tau_us", "eta", "xi_q_1s", "sensitivity", "p_e0", "xi_q_1s_mc", "sensitivity_mc"],
    );
    for (pt, (xi_mc, s_mc)) in points.iter().zip(&mc) {
        sweep.push_nums(&[us_from_lattice(pt.tau), pt.eta, pt.xi_q_1s, pt.sensitivity, pt.p0, *xi_mc, *s_mc]);
    }

    let tau_r = tau_from_us(cfg.settings.tau_us);
    let n_top = targets.iter().cloned().fold(0.0, f64::max);
    let omega = drives_for(setup, 0.0, &[n_top], prep.map)?[0];
    let records = ramsey_trajectory(setup, tau_r, 0.0, omega, cfg.settings.trajectory_sample_ns * 1e-9)?;
    let mut traj = Table::new("fig3_trajectory", &["t_us", "p_g", "p_e", "p_f", "n_m"]);
    for r in &records {
        traj.push_nums(&[us_from_lattice(r.t), r.p_g, r.p_e, r.p_f, r.n_m]);
    }

    let mut bundle = Bundle {
        results: prep.results(),
        ..Bundle::default()
    };
    let s: Vec<f64> = points.iter().map(|p| p.sensitivity).collect();
    let t: Vec<f64> = points.iter().map(|p| us_from_lattice(p.tau)).collect();
    if let Some(best) = argmin(&t, &s) {
        bundle.results.insert("tau_min_us".into(), best);
        bundle.results.insert("sensitivity_min".into(), s.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    if let Some(i) = (0..taus.len()).min_by(|&a, &b| (taus[a] - tau_r).abs().total_cmp(&(taus[b] - tau_r).abs())) {
        bundle.results.insert("reference_tau_us".into(), us_from_lattice(points[i].tau));
        bundle.results.insert("reference_eta".into(), points[i].eta);
        bundle.results.insert("reference_sensitivity".into(), points[i].sensitivity);
        bundle.results.insert("reference_sensitivity_mc".into(), mc[i].1);
    }
    bundle.results.insert("trajectory_n_bar".into(), n_top);
    bundle.streams.insert("shots_first_tau".into(), 0);
    bundle.tables.push(sweep);
    bundle.tables.push(traj);
    Ok(bundle)
}

fn fig4(cfg: &ExperimentConfig) -> Result<Bundle> {
    let prep = prepare(&cfg.params, &cfg.settings)?;
    let setup = &prep.setup;
    let tau = tau_from_us(cfg.settings.tau_us);
    let targets = default_targets();
    let detunings = cfg.grid("delta_s_mhz");
    let points: Vec<SensitivityPoint> = detunings
        .par_iter()
        .map(|&d| Ok(sensitivity_protocol(setup, &[tau], mhz(d), &targets, prep.map)?.remove(0)))
        .collect::<Result<_>>()?;
    let mc = monte_carlo(cfg, setup, &points, 0)?;
    let top = targets.len() - 1;

    let mut table = Table::new(
        "fig4_detuning_sweep",
        &["delta_s_mhz", "p_e0", "p_e_driven", "eta", "slope_sign", "xi_q_1s", "sensitivity", "sensitivity_mc"],
    );
    for ((d, pt), (_, s_mc)) in detunings.iter().zip(&points).zip(&mc) {
        table.push_nums(&[*d, pt.p0, pt.p_measured[top], pt.eta, pt.slope_sign, pt.xi_q_1s, pt.sensitivity, *s_mc]);
    }

    let mut bundle = Bundle {
        results: prep.results(),
        ..Bundle::default()
    };
    // Fringe nodes sit where cos(τΔ_s) = 0; the efficiency node also carries
    // the frequency-shift term.
    bundle.results.insert("fringe_node_mhz".into(), 1.0 / (4.0 * tau) / 1e6);
    let p = &setup.params;
    let aux = DispersiveAux::new(p.chi_qm, p.gamma_m, p.delta_d, 0.0)?;
    let node = (-(aux.d * aux.gamma_m / 2.0) / (aux.c * aux.chi)).atan() / tau;
    bundle.results.insert("analytic_efficiency_node_mhz".into(), to_mhz(node));
    bundle.results.insert("driven_n_bar".into(), targets[top]);
    bundle.results.insert("tau_us".into(), us_from_lattice(tau));
    let s: Vec<f64> = points.iter().map(|p| p.sensitivity).collect();
    if let Some(best) = argmin(detunings, &s) {
        bundle.results.insert("delta_s_min_mhz".into(), best);
    }
    bundle.streams.insert("shots_first_detuning".into(), 0);
    bundle.tables.push(table);
    Ok(bundle)
}

/// Ideal-readout, two-level, Λ_ef = 0 comparison against the closed forms.
pub fn ladder_setup(params: &DeviceParams, n_m_levels: usize) -> Result<SimulationSetup> {
    let mut s = SimulationSetup::new(params.clone(), HilbertSpec::new(2, n_m_levels)?);
    s.lambda_ef = 0.0;
    s.anchors = ReadoutAnchors::IDEAL;
    s.preparation = Preparation::SteadyState;
    s.timing.readout_gap = 0.0;
    s.timing.readout_offset = 0.0;
    Ok(s)
}

/// Device parameters of one ladder rung: zero temperature and ideal readout.
pub fn ladder_params(base: &DeviceParams, gamma_m: f64) -> DeviceParams {
    DeviceParams {
        gamma_m,
        n_q_th: 0.0,
        n_m_th: 0.0,
        p_e_ground: 0.0,
        p_e_excited: 1.0,
        ..base.clone()
    }
}

fn s2_ladder(cfg: &ExperimentConfig) -> Result<Bundle> {
    let tau = tau_from_us(cfg.settings.tau_us);
    let rows: Vec<[f64; 6]> = cfg
        .grid("gamma_m_mhz")
        .par_iter()
        .map(|&g| {
            let p = ladder_params(&cfg.params, mhz(g));
            let ana = |m| sensitivity(m, &p, tau, 0.0, p.delta_d).map(|r| r.value);
            let a1 = ana(SensitivityModel::Ana1)?;
            let num = numerical_sensitivity(&ladder_setup(&p, cfg.settings.sensing_n_m_levels)?, tau, 0.0)?;
            Ok([g, a1, ana(SensitivityModel::Ana2)?, ana(SensitivityModel::Ana3)?, num, num / a1 - 1.0])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(
        "s2_model_ladder",
        &["gamma_m_mhz", "ana1", "ana2", "ana3", "num", "num_rel_ana1"],
    );
    rows.iter().for_each(|r| table.push_nums(r));
    let mut bundle = Bundle::default();
    let worst = rows.iter().map(|r| r[5].abs()).fold(0.0, f64::max);
    bundle.results.insert("max_abs_num_rel_ana1".into(), worst);
    bundle.results.insert("tau_us".into(), us_from_lattice(tau));
    bundle.tables.push(table);
    Ok(bundle)
}

fn characterization(cfg: &ExperimentConfig) -> Result<Bundle> {
    let p = &cfg.params;
    let mut values = Table::new("characterization_values", &["quantity", "value", "unit"]);
    let mut add = |q: &str, v: f64, unit: &str| values.push(vec![Cell::from(q), Cell::Num(v), Cell::from(unit)]);

    add("g_qm_perturbative", to_mhz(g_qm_perturbative(p, p.omega_q)?), "MHz");
    let (_, dressed) = diagonalize_at_resonance(&HybridModel::from_params(p, p.cavity_modes.len()), mhz(300.0))?;
    add("g_qm_dressed", to_mhz(dressed.g_qm_numeric), "MHz");
    add("t1_purcell_limit", 1e6 / purcell_rate(p)?, "us");
    for (name, modes) in [("lambda_ef_two_modes", 2), ("lambda_ef_three_modes", 3)] {
        add(name, excitation_strengths(1e-15, p.omega_m_g, p, modes)?.lambda_ef, "1");
    }

    let a = p.analytic_view();
    let tau = cfg.settings.tau_us * US;
    let ana = |m| sensitivity(m, &a, tau, 0.0, a.delta_d);
    let a3 = ana(SensitivityModel::Ana3)?;
    add("eta_analytic", a3.eta, "1");
    add("p_e0_analytic", a3.p_e0, "1");
    add("sensitivity_ana1", ana(SensitivityModel::Ana1)?.value, "magnons/sqrt(Hz)");
    add("sensitivity_ana2", ana(SensitivityModel::Ana2)?.value, "magnons/sqrt(Hz)");
    add("sensitivity_ana3", a3.value, "magnons/sqrt(Hz)");
    add("field_sensitivity_ana3", field_sensitivity(a3.value, p)?, "T/sqrt(Hz)");

    let mut settings = cfg.settings.clone();
    settings.drive_map = if settings.magnon_calibration {
        DriveMapKind::Calibrated
    } else {
        DriveMapKind::SteadyState
    };
    let prep = prepare(p, &settings)?;
    add("pi_amplitude", prep.pi.amplitude, "rad/s");
    add("pi_fitted_amplitude", prep.pi.fitted_amplitude, "rad/s");
    add("pi_p_e_max", prep.pi.p_e_max, "1");
    add("t2_textbook", prep.t2_textbook * 1e6, "us");
    add("gamma_phi", prep.setup.rates.gamma_phi, "1/s");
    if let Some(d) = &prep.dephasing {
        add("t2_tuned", d.t2_fit * 1e6, "us");
    }

    let mut pi_sweep = Table::new("characterization_pi_sweep", &["amplitude_rad_s", "p_e"]);
    for &(amp, pe) in &prep.pi.sweep {
        pi_sweep.push_nums(&[amp, pe]);
    }

    let mut tables = Vec::new();
    if let Some(cal) = &prep.calibration {
        add("magnon_drive", cal.omega_d, "rad/s");
        add("lambda", cal.lambda, "rad/s");
        if let Some(res) = &cal.result {
            add("fit_n_bar", res.fit.n_bar, "1");
            add("fit_chi", to_mhz(res.fit.chi), "MHz");
            add("fit_gamma_m", to_mhz(res.fit.gamma_m), "MHz");
            add("n_ss", res.views.n_ss, "1");
            add("n_ta", res.views.n_ta, "1");
            tables.push(calibration_spectrum(&prep, res)?);
        }
    }

    let mut bundle = Bundle {
        results: prep.results(),
        ..Bundle::default()
    };
    for row in &values.rows {
        if let (Cell::Text(q), Cell::Num(v)) = (&row[0], &row[1]) {
            bundle.results.entry(q.clone()).or_insert(*v);
        }
    }
    bundle.tables.push(values);
    bundle.tables.push(pi_sweep);
    bundle.tables.extend(tables);
    Ok(bundle)
}

fn calibration_spectrum(prep: &Prepared, res: &magnon_dynamics::calibrate::SpectrumCalibration) -> Result<Table> {
    let opts = MagnonCalibrationOptions::default();
    let so = SpectrumOptions {
        zero_pad: opts.zero_pad,
        demean: true,
    };
    let spectrum = spectrum_from_ramsey(&res.record.taus(), &res.record.p_measured(), so)?
        .half(opts.delta_s)
        .window(opts.delta_s.abs() + mhz(11.0));
    let f = &res.fit;
    let params = [
        f.delta_s0,
        f.chi,
        f.gamma_m,
        f.n_bar,
        f.scale,
        f.offset,
        prep.setup.params.gamma_q,
        prep.setup.params.delta_d,
    ];
    let fit = Model::MultiFock { n_max: MULTI_FOCK_N_MAX }.eval_many(&spectrum.omega, &params);
    let mut table = Table::new("characterization_calibration_spectrum", &["detuning_mhz", "spectrum", "fit"]);
    for ((w, v), y) in spectrum.omega.iter().zip(&spectrum.value).zip(&fit) {
        table.push_nums(&[to_mhz(*w), *v, *y]);
    }
    Ok(table)
}
