//! Closed-form dispersive sensing theory: the magnon-number-split qubit
//! spectrum, Ramsey response, efficiency, shot-noise SNR and sensitivity.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::DeviceParams;
use crate::roots::bracketed_root;
use crate::units::{HBAR, MU_B};

/// Bracket for the unit-SNR root, in magnons.
pub const ROOT_BRACKET: (f64, f64) = (1e-8, 0.2);
pub const ROOT_REL_TOL: f64 = 1e-6;

/// Auxiliary quantities of the dispersive qubit-spectrum model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveAux {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub j: Complex64,
    pub n_m_g: f64,
    pub n_m_e: f64,
    pub chi: f64,
    pub gamma_m: f64,
    pub delta_d: f64,
    pub omega_d: f64,
}

impl DispersiveAux {
    /// From the drive strength Ω_d.
    pub fn new(chi: f64, gamma_m: f64, delta_d: f64, omega_d: f64) -> Result<Self> {
        if !(gamma_m > 0.0) {
            return Err(Error::ZeroMagnonLinewidth);
        }
        let h2 = (gamma_m / 2.0).powi(2);
        let y = 2.0 * chi + delta_d;
        let a = 2.0 * chi * chi / (h2 + chi * chi + (chi + delta_d).powi(2));
        let b = (h2 + delta_d * delta_d) / (h2 + y * y);
        let n_m_g = omega_d * omega_d / (h2 + delta_d * delta_d);
        let n_m_e = omega_d * omega_d / (h2 + y * y);
        let phase = Complex64::new(gamma_m / 2.0, -y) / Complex64::new(gamma_m / 2.0, y);
        Ok(Self {
            a,
            b,
            c: (1.0 - a) * (1.0 + b),
            d: a * (1.0 + b),
            j: phase * (n_m_g * a * (1.0 + b)),
            n_m_g,
            n_m_e,
            chi,
            gamma_m,
            delta_d,
            omega_d,
        })
    }

    /// From the ground-state population n̄_m^g instead of Ω_d.
    pub fn with_population(chi: f64, gamma_m: f64, delta_d: f64, n_m_g: f64) -> Result<Self> {
        if n_m_g < 0.0 {
            return Err(Error::invalid("n_m_g", "population must be nonnegative"));
        }
        let omega_d = (n_m_g * ((gamma_m / 2.0).powi(2) + delta_d * delta_d)).sqrt();
        Self::new(chi, gamma_m, delta_d, omega_d)
    }

    /// Frequency shift per Fock state, 2χ + Δ_d.
    pub fn fock_shift(&self) -> f64 {
        2.0 * self.chi + self.delta_d
    }

    pub fn omega_q_n(&self, omega_q: f64, n: usize) -> f64 {
        omega_q + n as f64 * self.fock_shift() + self.n_m_g * self.c * self.chi
    }

    /// Δ_s^n given Δ_s = ω_q − ω_s at zero population.
    pub fn delta_s_n(&self, delta_s: f64, n: usize) -> f64 {
        self.omega_q_n(delta_s, n)
    }

    pub fn gamma_q_n(&self, gamma_q: f64, n: usize) -> f64 {
        gamma_q + n as f64 * self.gamma_m + self.n_m_g * self.d * self.gamma_m
    }
}

/// Auxiliary quantities for `params` (χ, γ_m) with the given detuning and drive.
pub fn dispersive_aux(params: &DeviceParams, delta_d: f64, omega_d: f64) -> Result<DispersiveAux> {
    DispersiveAux::new(params.chi_qm, params.gamma_m, delta_d, omega_d)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// (−J)^n e^J / n!, the complex amplitude of Fock component `n`.
fn fock_amplitude(n: usize, aux: &DispersiveAux) -> Complex64 {
    (-aux.j).powu(n as u32) * aux.j.exp() / factorial(n)
}

/// Qubit spectral density of Fock component `n` at Δω = ω − ω_s.
/// `delta_s` is ω_q − ω_s at zero magnon population.
pub fn qubit_spectrum_fock(n: usize, delta_omega: f64, delta_s: f64, aux: &DispersiveAux, gamma_q: f64) -> f64 {
    let den = Complex64::new(aux.gamma_q_n(gamma_q, n) / 2.0, -(delta_omega - aux.delta_s_n(delta_s, n)));
    (fock_amplitude(n, aux) / den).re / std::f64::consts::PI
}

/// Integral of [`qubit_spectrum_fock`] over all Δω.
pub fn fock_weight(n: usize, aux: &DispersiveAux) -> f64 {
    fock_amplitude(n, aux).re
}

/// C Σ_{n=0}^{n_max} s_n(Δω) + S0.
#[allow(clippy::too_many_arguments)]
pub fn composite_spectrum(
    delta_omega: f64,
    delta_s: f64,
    aux: &DispersiveAux,
    gamma_q: f64,
    scale: f64,
    offset: f64,
    n_max: usize,
) -> f64 {
    let sum: f64 = (0..=n_max)
        .map(|n| qubit_spectrum_fock(n, delta_omega, delta_s, aux, gamma_q))
        .sum();
    scale * sum + offset
}

/// Ramsey fringe ½[1 + cos(τΔ) e^{−τγ/2}].
pub fn ramsey_pe(tau: f64, delta_s0: f64, gamma_q0: f64) -> f64 {
    0.5 * (1.0 + (tau * delta_s0).cos() * (-tau * gamma_q0 / 2.0).exp())
}

/// Ramsey fringe with the population-shifted detuning and linewidth of the
/// zero-Fock peak.
pub fn ramsey_pe_shifted(n_m_g: f64, tau: f64, delta_s0: f64, gamma_q0: f64, aux: &DispersiveAux) -> f64 {
    ramsey_pe(
        tau,
        delta_s0 + n_m_g * aux.c * aux.chi,
        gamma_q0 + n_m_g * aux.d * aux.gamma_m,
    )
}

/// Efficiency with the sign of the response kept separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    /// η ≥ 0.
    pub eta: f64,
    /// +1 when p_e increases with population, −1 when it decreases.
    pub sign: f64,
}

impl Efficiency {
    /// Signed slope dp_e/dn̄.
    pub fn slope(&self) -> f64 {
        self.sign * self.eta
    }
}

/// First-order efficiency: η = ∓½ τ e^{−γτ/2} [cos(τΔ) D γ_m/2 + sin(τΔ) C χ].
pub fn efficiency(tau: f64, delta_s0: f64, gamma_q0: f64, aux: &DispersiveAux) -> Efficiency {
    let bracket = (tau * delta_s0).cos() * aux.d * aux.gamma_m / 2.0 + (tau * delta_s0).sin() * aux.c * aux.chi;
    let slope = -0.5 * tau * (-gamma_q0 * tau / 2.0).exp() * bracket;
    Efficiency {
        eta: slope.abs(),
        sign: if slope < 0.0 { -1.0 } else { 1.0 },
    }
}

/// First-order expansion of the Ramsey response in n̄_m^g (n̄ ≤ 0.2).
pub fn pe_first_order(n_m_g: f64, tau: f64, delta_s0: f64, gamma_q0: f64, aux: &DispersiveAux) -> Result<f64> {
    if !(0.0..=0.2).contains(&n_m_g) {
        return Err(Error::Domain(format!(
            "first-order expansion requires 0 <= n <= 0.2, got {n_m_g}"
        )));
    }
    Ok(ramsey_pe(tau, delta_s0, gamma_q0) + efficiency(tau, delta_s0, gamma_q0, aux).slope() * n_m_g)
}

/// Affine readout-error map with p_f counted as excited.
pub fn readout_map(p_ideal: f64, p_e_ground: f64, p_e_excited: f64) -> f64 {
    p_e_ground + (p_e_excited - p_e_ground) * p_ideal
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalNoise {
    pub x: f64,
    pub xi_q: f64,
    pub snr: f64,
}

/// Signal |p_e(n̄) − p_e(0)|, shot noise √(p(1−p)) √(τ_total/T) evaluated at
/// `p_noise`, and their ratio.
pub fn signal_noise_snr(p_e0: f64, p_e_n: f64, p_noise: f64, tau_total: f64, t: f64) -> Result<SignalNoise> {
    if !(t > 0.0) {
        return Err(Error::invalid("T", "measurement time must be positive"));
    }
    let x = (p_e_n - p_e0).abs();
    let xi_q = shot_noise(p_noise, tau_total, t);
    Ok(SignalNoise {
        x,
        xi_q,
        snr: if x == 0.0 { 0.0 } else { x / xi_q },
    })
}

/// √(p(1−p)) √(τ_total/T).
pub fn shot_noise(p: f64, tau_total: f64, t: f64) -> f64 {
    (p * (1.0 - p)).max(0.0).sqrt() * (tau_total / t).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensitivityModel {
    Ana1,
    Ana2,
    Ana3,
    Num,
}

impl SensitivityModel {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Ana1 => "ana1",
            Self::Ana2 => "ana2",
            Self::Ana3 => "ana3",
            Self::Num => "num",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityResult {
    /// Magnons/√Hz.
    pub value: f64,
    pub model: SensitivityModel,
    pub tau: f64,
    pub delta_s: f64,
    pub delta_d: f64,
    /// Measured-probability efficiency.
    pub eta: f64,
    /// Measured p_e with no magnons.
    pub p_e0: f64,
}

/// √(p_e(0)(1−p_e(0))) √τ_total / |η|.
pub fn ana3_sensitivity(eta: f64, p_e0: f64, tau_total: f64) -> Result<f64> {
    if eta == 0.0 || !eta.is_finite() {
        return Err(Error::ZeroEfficiency);
    }
    Ok(shot_noise(p_e0, tau_total, 1.0) / eta.abs())
}

/// Population at which SNR(T = 1 s) reaches one, for a response curve
/// `p_e(n̄)` (already readout-mapped). Equal to S in magnons/√Hz.
pub fn unit_snr_root<F>(p_e: F, tau_total: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let p0 = p_e(0.0);
    let f = |n: f64| {
        let pn = p_e(n);
        let x = (pn - p0).abs();
        x / shot_noise(pn, tau_total, 1.0) - 1.0
    };
    bracketed_root(f, ROOT_BRACKET.0, ROOT_BRACKET.1, ROOT_REL_TOL)
}

/// Sensitivity of one analytic model. `params` supplies γ_q, χ, γ_m, τ_total
/// and the readout anchors; pass [`DeviceParams::analytic_view`] for the
/// analytics column.
pub fn sensitivity(
    model: SensitivityModel,
    params: &DeviceParams,
    tau: f64,
    delta_s: f64,
    delta_d: f64,
) -> Result<SensitivityResult> {
    let aux = DispersiveAux::new(params.chi_qm, params.gamma_m, delta_d, 0.0)?;
    let gq = params.gamma_q;
    let map = |p: f64| readout_map(p, params.p_e_ground, params.p_e_excited);
    let contrast = params.p_e_excited - params.p_e_ground;
    let eff = efficiency(tau, delta_s, gq, &aux);
    let eta = eff.eta * contrast;
    let p_e0 = map(ramsey_pe(tau, delta_s, gq));
    let value = match model {
        SensitivityModel::Ana3 => ana3_sensitivity(eta, p_e0, params.tau_total)?,
        SensitivityModel::Ana1 => {
            if eta == 0.0 {
                return Err(Error::ZeroEfficiency);
            }
            unit_snr_root(|n| map(ramsey_pe_shifted(n, tau, delta_s, gq, &aux)), params.tau_total)?
        }
        SensitivityModel::Ana2 => {
            if eta == 0.0 {
                return Err(Error::ZeroEfficiency);
            }
            let slope = eff.slope();
            unit_snr_root(
                |n| map((ramsey_pe(tau, delta_s, gq) + slope * n).clamp(0.0, 1.0)),
                params.tau_total,
            )?
        }
        SensitivityModel::Num => {
            return Err(Error::Domain("numerical sensitivity is computed by the dynamics engine".into()))
        }
    };
    Ok(SensitivityResult {
        value,
        model,
        tau,
        delta_s,
        delta_d,
        eta,
        p_e0,
    })
}

/// Field sensitivity √(S/N_spins) ħγ_m/(g μ_B), tesla/√Hz. Assumes a resonant
/// magnon drive.
pub fn field_sensitivity(s: f64, params: &DeviceParams) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::invalid("sensitivity", "must be nonnegative"));
    }
    if !(params.n_spins > 0.0) || !(params.g_factor > 0.0) {
        return Err(Error::invalid("magnon.n_spins", "spin count and g-factor must be positive"));
    }
    Ok((s / params.n_spins).sqrt() * HBAR * params.gamma_m / (params.g_factor * MU_B))
}

/// Extra qubit linewidth n̄ D γ_m due to the magnon population.
pub fn qubit_linewidth_excess(n_m_g: f64, aux: &DispersiveAux) -> f64 {
    n_m_g * aux.d * aux.gamma_m
}

/// Magnon linewidth that maximizes the linewidth excess at fixed n̄.
pub fn optimal_gamma_m(chi: f64) -> f64 {
    4.0 * chi.abs()
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingExponents {
    pub eta_small: f64,
    pub eta_large: f64,
    pub s_small: f64,
    pub s_large: f64,
    pub s_bd_small: f64,
    pub s_bd_large: f64,
}

/// Log-log slopes of η, S (ana3) and S_Bd over the first and last decade of
/// `gamma_m_grid`, at resonant qubit and magnon drives. The grid must reach
/// two decades below and above 4|χ|.
pub fn asymptotic_scaling_check(
    params: &DeviceParams,
    chi: f64,
    gamma_m_grid: &[f64],
    tau: f64,
) -> Result<ScalingExponents> {
    let opt = optimal_gamma_m(chi);
    let lo = gamma_m_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = gamma_m_grid.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0) || lo > opt / 100.0 || hi < opt * 100.0 {
        return Err(Error::invalid(
            "gamma_m_grid",
            "must span two decades on each side of 4|chi|",
        ));
    }
    let mut eta = Vec::new();
    let mut s = Vec::new();
    let mut sbd = Vec::new();
    for &gm in gamma_m_grid {
        let p = DeviceParams {
            chi_qm: chi,
            gamma_m: gm,
            ..params.clone()
        };
        let r = sensitivity(SensitivityModel::Ana3, &p, tau, 0.0, 0.0)?;
        eta.push(r.eta);
        s.push(r.value);
        sbd.push(field_sensitivity(r.value, &p)?);
    }
    let pick = |keep: &dyn Fn(f64) -> bool, y: &[f64]| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = gamma_m_grid
            .iter()
            .zip(y)
            .filter(|(g, _)| keep(**g))
            .map(|(g, v)| (*g, *v))
            .unzip();
        loglog_slope(&xs, &ys)
    };
    let small = |g: f64| g <= lo * 10.0;
    let large = |g: f64| g >= hi / 10.0;
    Ok(ScalingExponents {
        eta_small: pick(&small, &eta),
        eta_large: pick(&large, &eta),
        s_small: pick(&small, &s),
        s_large: pick(&large, &s),
        s_bd_small: pick(&small, &sbd),
        s_bd_large: pick(&large, &sbd),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz, US};
    use approx::assert_relative_eq;

    fn operating_aux() -> DispersiveAux {
        DispersiveAux::new(mhz(-1.762), mhz(1.567), 0.0, 0.0).unwrap()
    }

    #[test]
    fn zero_drive_has_no_population() {
        let aux = DispersiveAux::new(mhz(-1.76), mhz(1.567), mhz(0.1), 0.0).unwrap();
        assert_eq!(aux.n_m_g, 0.0);
        assert_eq!(aux.n_m_e, 0.0);
        assert_eq!(aux.j, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn zero_linewidth_rejected() {
        assert!(matches!(
            DispersiveAux::new(mhz(-1.76), 0.0, 0.0, 1.0),
            Err(Error::ZeroMagnonLinewidth)
        ));
    }

    #[test]
    fn strong_dispersive_limit() {
        let aux = DispersiveAux::new(mhz(-500.0), mhz(1.0), 0.0, 0.0).unwrap();
        assert!(aux.c.abs() < 1e-5);
        assert_relative_eq!(aux.d, 1.0, epsilon = 1e-5);
    }

    #[test]
    fn zero_population_spectrum_is_lorentzian() {
        let aux = operating_aux();
        let gq = mhz(0.33);
        let ds = mhz(-4.0);
        let peak = qubit_spectrum_fock(0, ds, ds, &aux, gq);
        assert_relative_eq!(peak, 2.0 / (std::f64::consts::PI * gq), max_relative = 1e-12);
        let half = qubit_spectrum_fock(0, ds + gq / 2.0, ds, &aux, gq);
        assert_relative_eq!(half, peak / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn ramsey_limits() {
        assert_eq!(ramsey_pe(0.0, mhz(-4.0), mhz(0.33)), 1.0);
        assert_relative_eq!(ramsey_pe(1.0, mhz(-4.0), mhz(0.33)), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn first_order_at_zero_population() {
        let aux = operating_aux();
        let p = pe_first_order(0.0, 0.8 * US, 0.0, mhz(0.354), &aux).unwrap();
        assert_eq!(p, ramsey_pe(0.8 * US, 0.0, mhz(0.354)));
        assert!(pe_first_order(0.3, 0.8 * US, 0.0, mhz(0.354), &aux).is_err());
    }

    #[test]
    fn node_keeps_only_frequency_shift_term() {
        let aux = DispersiveAux::new(mhz(-1.762), mhz(1.567), mhz(0.3), 0.0).unwrap();
        let tau = 0.8 * US;
        let ds = std::f64::consts::FRAC_PI_2 / tau;
        let e = efficiency(tau, ds, mhz(0.354), &aux);
        let shift_only = 0.5 * tau * (-mhz(0.354) * tau / 2.0).exp() * (aux.c * aux.chi).abs();
        assert_relative_eq!(e.eta, shift_only, max_relative = 1e-9);
    }

    #[test]
    fn efficiency_zero_at_zero_tau() {
        assert_eq!(efficiency(0.0, 0.0, mhz(0.354), &operating_aux()).eta, 0.0);
    }

    #[test]
    fn strong_dispersive_node_efficiency_vanishes() {
        let aux = DispersiveAux::new(mhz(-500.0), mhz(1.0), 0.0, 0.0).unwrap();
        let tau = 0.8 * US;
        let node = efficiency(tau, std::f64::consts::FRAC_PI_2 / tau, mhz(0.354), &aux);
        let fringe = efficiency(tau, 0.0, mhz(0.354), &aux);
        assert!(node.eta / fringe.eta < 1e-3);
    }

    #[test]
    fn shot_noise_arithmetic() {
        let sn = signal_noise_snr(0.5, 0.5, 0.5, 5.0 * US, 1.0).unwrap();
        assert_eq!(sn.x, 0.0);
        assert_eq!(sn.snr, 0.0);
        assert_relative_eq!(sn.xi_q, 1.118e-3, max_relative = 1e-3);
        let one = signal_noise_snr(0.5, 0.51, 0.5, 5.0 * US, 1.0).unwrap();
        let two = signal_noise_snr(0.5, 0.51, 0.5, 5.0 * US, 2.0).unwrap();
        assert_relative_eq!(two.snr / one.snr, 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn zero_efficiency_is_an_error() {
        assert!(matches!(ana3_sensitivity(0.0, 0.5, 5.0 * US), Err(Error::ZeroEfficiency)));
    }

    #[test]
    fn vanishing_efficiency_is_reported() {
        let p = DeviceParams::reference().analytic_view();
        for m in [SensitivityModel::Ana1, SensitivityModel::Ana2, SensitivityModel::Ana3] {
            assert!(matches!(sensitivity(m, &p, 0.0, 0.0, 0.0), Err(Error::ZeroEfficiency)));
        }
    }

    #[test]
    fn field_sensitivity_zero_population() {
        assert_eq!(field_sensitivity(0.0, &DeviceParams::reference()).unwrap(), 0.0);
    }

    #[test]
    fn optimum_is_four_chi() {
        assert_relative_eq!(optimal_gamma_m(mhz(-2.0)), mhz(8.0), max_relative = 1e-12);
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let x: Vec<f64> = (1..10).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-0.5)).collect();
        assert_relative_eq!(loglog_slope(&x, &y), -0.5, epsilon = 1e-12);
    }
}
