//! Rotating-frame Hamiltonian, collapse channels and the assembled Liouvillian.

use crate::error::{Error, Result};
use crate::sparse::{commutator_superop, dissipator_superop, CsrMatrix};
use magnon_core::{build_operators, CMatrix, DeviceParams, HilbertSpec, OperatorSet};
use num_complex::Complex64;

/// Λ_ef used by the full simulations unless overridden.
pub const LAMBDA_EF_DEFAULT: f64 = 8.65;

/// Static couplings of the doubly rotating frame.
///
/// H/ħ = (Δ_s − α/2) n_q + α/2 n_q² + Δ_d n_m + 2χ n_q n_m
///     + Ω_s(t)(b + b†) + Ω_d(t)[c + c† + Λ_ef(|e⟩⟨f| + |f⟩⟨e|)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveHamiltonianSpec {
    pub hilbert: HilbertSpec,
    /// Qubit frame detuning, rad/s.
    pub delta_s: f64,
    /// Kittel mode minus magnon drive frequency, rad/s.
    pub delta_d: f64,
    pub alpha: f64,
    pub chi: f64,
    pub lambda_ef: f64,
}

impl EffectiveHamiltonianSpec {
    /// Dressed anharmonicity, χ and Δ_d from `params`.
    pub fn from_params(params: &DeviceParams, hilbert: HilbertSpec, delta_s: f64, lambda_ef: f64) -> Self {
        Self {
            hilbert,
            delta_s,
            delta_d: params.delta_d,
            alpha: params.alpha0,
            chi: params.chi_qm,
            lambda_ef,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hilbert.check()?;
        for (name, v) in [
            ("delta_s", self.delta_s),
            ("delta_d", self.delta_d),
            ("alpha", self.alpha),
            ("chi", self.chi),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if !(self.lambda_ef >= 0.0) || !self.lambda_ef.is_finite() {
            return Err(Error::invalid("lambda_ef", "must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn static_part(&self, ops: &OperatorSet) -> CMatrix {
        let r = |x: f64| Complex64::new(x, 0.0);
        let nq2 = &ops.n_q * &ops.n_q;
        let cross = &ops.n_q * &ops.n_m;
        &ops.n_q * r(self.delta_s - 0.5 * self.alpha)
            + nq2 * r(0.5 * self.alpha)
            + &ops.n_m * r(self.delta_d)
            + cross * r(2.0 * self.chi)
    }

    /// Coefficient of Ω_s(t).
    pub fn qubit_drive(&self, ops: &OperatorSet) -> CMatrix {
        &ops.b + &ops.b_dag
    }

    /// Coefficient of Ω_d(t).
    pub fn magnon_drive(&self, ops: &OperatorSet) -> CMatrix {
        &ops.c + &ops.c_dag + &ops.flip_ef * Complex64::new(self.lambda_ef, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    QubitDecay,
    QubitThermal,
    QubitDephase,
    MagnonDecay,
    MagnonThermal,
}

impl ChannelKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::QubitDecay => "qubit-decay",
            Self::QubitThermal => "qubit-thermal",
            Self::QubitDephase => "qubit-dephase",
            Self::MagnonDecay => "magnon-decay",
            Self::MagnonThermal => "magnon-thermal",
        }
    }

    pub fn operator(&self, ops: &OperatorSet) -> CMatrix {
        match self {
            Self::QubitDecay => ops.b.clone(),
            Self::QubitThermal => ops.b_dag.clone(),
            Self::QubitDephase => ops.n_q.clone(),
            Self::MagnonDecay => ops.c.clone(),
            Self::MagnonThermal => ops.c_dag.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseChannel {
    pub kind: ChannelKind,
    /// rad/s
    pub rate: f64,
}

/// Rates behind the five collapse channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRates {
    pub gamma_1: f64,
    /// Pure dephasing; the channel rate is 2γ_φ on n_q.
    pub gamma_phi: f64,
    pub n_q_th: f64,
    pub gamma_m: f64,
    pub n_m_th: f64,
}

impl ChannelRates {
    /// γ_φ = (γ_q − γ₁)/2, the value that makes the bare two-level coherence
    /// decay at γ_q/2.
    pub fn from_params(params: &DeviceParams) -> Self {
        Self {
            gamma_1: params.gamma_1(),
            gamma_phi: (0.5 * (params.gamma_q - params.gamma_1())).max(0.0),
            n_q_th: params.n_q_th,
            gamma_m: params.gamma_m,
            n_m_th: params.n_m_th,
        }
    }

    /// Every rate zero.
    pub fn closed() -> Self {
        Self {
            gamma_1: 0.0,
            gamma_phi: 0.0,
            n_q_th: 0.0,
            gamma_m: 0.0,
            n_m_th: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_1", self.gamma_1),
            ("gamma_phi", self.gamma_phi),
            ("n_q_th", self.n_q_th),
            ("gamma_m", self.gamma_m),
            ("n_m_th", self.n_m_th),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "rates and populations must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    pub fn channels(&self) -> Vec<CollapseChannel> {
        use ChannelKind::*;
        vec![
            CollapseChannel {
                kind: QubitDecay,
                rate: self.gamma_1 * (1.0 + self.n_q_th),
            },
            CollapseChannel {
                kind: QubitThermal,
                rate: self.gamma_1 * self.n_q_th,
            },
            CollapseChannel {
                kind: QubitDephase,
                rate: 2.0 * self.gamma_phi,
            },
            CollapseChannel {
                kind: MagnonDecay,
                rate: self.gamma_m * (1.0 + self.n_m_th),
            },
            CollapseChannel {
                kind: MagnonThermal,
                rate: self.gamma_m * self.n_m_th,
            },
        ]
    }
}

/// Hamiltonian and channels compiled to Liouville space.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    pub hamiltonian: EffectiveHamiltonianSpec,
    pub rates: ChannelRates,
    ops: OperatorSet,
    h0: CMatrix,
    free: CsrMatrix,
    qubit: CsrMatrix,
    magnon: CsrMatrix,
}

impl LindbladModel {
    pub fn new(hamiltonian: EffectiveHamiltonianSpec, rates: ChannelRates) -> Result<Self> {
        hamiltonian.validate()?;
        rates.validate()?;
        let ops = build_operators(hamiltonian.hilbert)?;
        let h0 = hamiltonian.static_part(&ops);
        let mut parts = vec![commutator_superop(&h0)];
        for ch in rates.channels().into_iter().filter(|c| c.rate > 0.0) {
            parts.push(dissipator_superop(&ch.kind.operator(&ops), ch.rate));
        }
        let one = Complex64::new(1.0, 0.0);
        let free = CsrMatrix::combine(&parts.iter().map(|p| (p, one)).collect::<Vec<_>>());
        let qubit = commutator_superop(&hamiltonian.qubit_drive(&ops));
        let magnon = commutator_superop(&hamiltonian.magnon_drive(&ops));
        Ok(Self {
            hamiltonian,
            rates,
            ops,
            h0,
            free,
            qubit,
            magnon,
        })
    }

    pub fn hilbert(&self) -> HilbertSpec {
        self.hamiltonian.hilbert
    }

    pub fn dim(&self) -> usize {
        self.hilbert().dim()
    }

    pub fn ops(&self) -> &OperatorSet {
        &self.ops
    }

    /// Drive-free Hamiltonian H₀.
    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    /// Liouvillian with a constant magnon drive folded in and the qubit drive
    /// kept separate.
    pub fn generator(&self, omega_d: f64) -> Generator {
        let base = if omega_d == 0.0 {
            self.free.clone()
        } else {
            CsrMatrix::combine(&[
                (&self.free, Complex64::new(1.0, 0.0)),
                (&self.magnon, Complex64::new(omega_d, 0.0)),
            ])
        };
        Generator {
            dim: self.dim(),
            base,
            base_omega_d: omega_d,
            qubit: self.qubit.clone(),
            magnon: self.magnon.clone(),
        }
    }
}

/// L(t) = L_base + Ω_s(t) L_s + (Ω_d(t) − Ω̄_d) L_d.
#[derive(Debug, Clone)]
pub struct Generator {
    pub(crate) dim: usize,
    pub(crate) base: CsrMatrix,
    pub(crate) base_omega_d: f64,
    pub(crate) qubit: CsrMatrix,
    pub(crate) magnon: CsrMatrix,
}

impl Generator {
    /// Hilbert-space dimension d; states have d² entries.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base_omega_d(&self) -> f64 {
        self.base_omega_d
    }

    /// Dense L at fixed drive strengths.
    pub fn dense(&self, omega_s: f64, omega_d: f64) -> CMatrix {
        let mut m = self.base.to_dense();
        if omega_s != 0.0 {
            m += self.qubit.to_dense() * Complex64::new(omega_s, 0.0);
        }
        let extra = omega_d - self.base_omega_d;
        if extra != 0.0 {
            m += self.magnon.to_dense() * Complex64::new(extra, 0.0);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use magnon_core::units::mhz;

    #[test]
    fn static_part_is_diagonal_with_expected_levels() {
        let hilbert = HilbertSpec::new(3, 3).unwrap();
        let h = EffectiveHamiltonianSpec {
            hilbert,
            delta_s: mhz(1.0),
            delta_d: mhz(0.5),
            alpha: mhz(-100.0),
            chi: mhz(-2.0),
            lambda_ef: 0.0,
        };
        let ops = build_operators(hilbert).unwrap();
        let m = h.static_part(&ops);
        let e = |q: usize, n: usize| m[(q * 3 + n, q * 3 + n)].re;
        assert!((e(1, 0) - mhz(1.0)).abs() < 1e-6);
        assert!((e(2, 0) - (2.0 * mhz(1.0) + mhz(-100.0))).abs() < 1e-6);
        assert!((e(1, 2) - e(1, 0) - e(0, 2) - 2.0 * 2.0 * mhz(-2.0)).abs() < 1e-6);
        assert!(m.iter().enumerate().all(|(k, v)| k % 10 == 0 || *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn textbook_dephasing_partition() {
        let p = DeviceParams::reference();
        let r = ChannelRates::from_params(&p);
        assert!((2.0 * r.gamma_phi + r.gamma_1 - p.gamma_q).abs() < 1e-6 * p.gamma_q);
        let labels: Vec<_> = r.channels().iter().map(|c| c.kind.label()).collect();
        assert_eq!(labels.len(), 5);
        assert!(ChannelRates { gamma_m: -1.0, ..r }.validate().is_err());
    }

    #[test]
    fn negative_lambda_rejected() {
        let p = DeviceParams::reference();
        let h = EffectiveHamiltonianSpec::from_params(&p, HilbertSpec::sensing(), 0.0, -1.0);
        assert!(h.validate().is_err());
    }
}
