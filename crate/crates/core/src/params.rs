//! Static device parameters and the human-editable parameter file.
//!
//! The file is TOML with units in the key names (`*_ghz`, `*_mhz`, `*_us`).
//! Every key is optional when overlaying onto an existing parameter set, so
//! an experiment config only needs to list what it changes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{ghz, khz, mhz, to_ghz, to_khz, to_mhz, US};

const BUNDLED: &str = include_str!("../data/device.toml");

/// One TE10p mode of the 3D cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityMode {
    /// Bare frequency, rad/s.
    pub omega_p: f64,
    /// Dressed frequency with the qubit in the ground state, rad/s.
    pub omega_p_dressed: f64,
    /// Total linewidth, rad/s. `None` when not measured.
    pub kappa_p: Option<f64>,
    /// Input-port coupling rate, rad/s.
    pub kappa_p_in: Option<f64>,
    pub g_qp: f64,
    /// Signed magnon coupling, rad/s.
    pub g_mp: f64,
}

/// Linear map from coil current to the dressed Kittel-mode frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilMap {
    pub omega_m_at_zero: f64,
    /// rad/s per ampere.
    pub xi: f64,
}

impl CoilMap {
    pub fn frequency(&self, current: f64) -> f64 {
        self.omega_m_at_zero + self.xi * current
    }
}

/// Values from the analytics column of the parameter table. The closed-form
/// models use these in place of the simulation values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticsColumn {
    pub gamma_q: f64,
    pub delta_d: f64,
    pub p_e_ground: f64,
    pub p_e_excited: f64,
}

/// All static physical parameters, angular units throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    /// Bare qubit g-e frequency (hybrid diagonalization input).
    pub omega_q: f64,
    /// Bare anharmonicity.
    pub alpha: f64,
    /// Dressed qubit g-e frequency.
    pub omega_q0: f64,
    /// Dressed anharmonicity (negative for a transmon).
    pub alpha0: f64,
    /// Intrinsic qubit linewidth, T2* = 2 / gamma_q.
    pub gamma_q: f64,
    /// Qubit relaxation time, s.
    pub t1: f64,
    pub omega_m_g: f64,
    pub gamma_m: f64,
    /// Magnon drive detuning omega_m^g - omega_d.
    pub delta_d: f64,
    pub chi_qm: f64,
    pub g_qm: f64,
    pub n_q_th: f64,
    pub n_m_th: f64,
    pub p_e_ground: f64,
    pub p_e_excited: f64,
    /// Shot repetition period, s.
    pub tau_total: f64,
    pub cavity_modes: Vec<CavityMode>,
    pub coil: CoilMap,
    pub n_spins: f64,
    pub g_factor: f64,
    pub analytics: AnalyticsColumn,
}

/// omega_m^g(I) = omega_m^g(0) + xi I.
pub fn coil_to_frequency(current: f64, params: &DeviceParams) -> f64 {
    params.coil.frequency(current)
}

impl DeviceParams {
    /// The bundled parameter set (characterization tables, simulation column).
    pub fn reference() -> Self {
        Self::from_toml_str(BUNDLED).expect("bundled parameter file is valid")
    }

    /// Parses a complete parameter file. Missing keys fall back to the
    /// bundled values.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: ParamFile =
            toml::from_str(text).map_err(|e| Error::ParameterFile(e.to_string()))?;
        let base = if text.as_ptr() == BUNDLED.as_ptr() {
            None
        } else {
            Some(Self::reference())
        };
        raw.apply(base)
    }

    /// Overlays the keys present in `text` on top of `self`.
    pub fn overlay_toml_str(&self, text: &str) -> Result<Self> {
        let raw: ParamFile =
            toml::from_str(text).map_err(|e| Error::ParameterFile(e.to_string()))?;
        raw.apply(Some(self.clone()))
    }

    /// Copy with the analytics-column values substituted.
    pub fn analytic_view(&self) -> Self {
        Self {
            gamma_q: self.analytics.gamma_q,
            delta_d: self.analytics.delta_d,
            p_e_ground: self.analytics.p_e_ground,
            p_e_excited: self.analytics.p_e_excited,
            ..self.clone()
        }
    }

    /// Qubit relaxation rate 1/T1.
    pub fn gamma_1(&self) -> f64 {
        1.0 / self.t1
    }

    /// Dressed qubit-magnon detuning omega_q^0 - omega_m^g.
    pub fn delta_qm(&self) -> f64 {
        self.omega_q0 - self.omega_m_g
    }

    /// Every invariant violation, in field order.
    pub fn violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        let nonneg = [
            ("qubit.linewidth_mhz", self.gamma_q),
            ("magnon.linewidth_mhz", self.gamma_m),
            ("qubit.thermal_population", self.n_q_th),
            ("magnon.thermal_population", self.n_m_th),
            ("magnon.n_spins", self.n_spins),
            ("magnon.g_factor", self.g_factor),
            ("analytics.qubit_linewidth_mhz", self.analytics.gamma_q),
        ];
        for (field, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                out.push(Error::invalid(field, format!("must be finite and nonnegative, got {v}")));
            }
        }
        if !(self.t1 > 0.0) {
            out.push(Error::invalid("qubit.t1_us", "must be positive"));
        }
        if !(self.tau_total > 0.0) {
            out.push(Error::invalid("readout.tau_total_us", "must be positive"));
        }
        for (field, lo, hi) in [
            ("readout", self.p_e_ground, self.p_e_excited),
            ("analytics", self.analytics.p_e_ground, self.analytics.p_e_excited),
        ] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
                out.push(Error::invalid(
                    format!("{field}.p_e_ground/p_e_excited"),
                    "probabilities must lie in [0, 1]",
                ));
            } else if lo >= hi {
                out.push(Error::invalid(
                    format!("{field}.p_e_ground"),
                    "must be below p_e_excited",
                ));
            }
        }
        if !(self.alpha0 < 0.0) {
            out.push(Error::invalid("qubit.dressed_anharmonicity_mhz", "must be negative for a transmon"));
        }
        if !(self.alpha < 0.0) {
            out.push(Error::invalid("qubit.bare_anharmonicity_ghz", "must be negative for a transmon"));
        }
        let delta = self.delta_qm();
        let expected = self.alpha0 / (delta * (delta + self.alpha0));
        if self.chi_qm != 0.0 && expected.is_finite() && expected.signum() != self.chi_qm.signum() {
            out.push(Error::invalid(
                "coupling.chi_qm_mhz",
                "sign inconsistent with alpha0 g^2 / (delta (delta + alpha0))",
            ));
        }
        for (i, m) in self.cavity_modes.iter().enumerate() {
            for (name, v) in [("linewidth_mhz", m.kappa_p), ("input_coupling_mhz", m.kappa_p_in)] {
                if let Some(v) = v {
                    if !(v >= 0.0) {
                        out.push(Error::invalid(format!("cavity[{i}].{name}"), "must be nonnegative"));
                    }
                }
            }
            if !(m.g_qp >= 0.0) {
                out.push(Error::invalid(format!("cavity[{i}].g_qubit_mhz"), "must be nonnegative"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Serializes back to the parameter-file format.
    pub fn to_toml_string(&self) -> String {
        let raw = ParamFile::from_params(self);
        toml::to_string(&raw).expect("parameter file serializes")
    }
}

// ---------------------------------------------------------------------------
// File representation

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamFile {
    #[serde(default)]
    qubit: QubitSection,
    #[serde(default)]
    magnon: MagnonSection,
    #[serde(default)]
    coupling: CouplingSection,
    #[serde(default)]
    coil: CoilSection,
    #[serde(default)]
    readout: ReadoutSection,
    #[serde(default)]
    analytics: AnalyticsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cavity: Option<Vec<CavitySection>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QubitSection {
    bare_freq_ghz: Option<f64>,
    bare_anharmonicity_ghz: Option<f64>,
    dressed_freq_ghz: Option<f64>,
    dressed_anharmonicity_mhz: Option<f64>,
    linewidth_mhz: Option<f64>,
    t1_us: Option<f64>,
    thermal_population: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MagnonSection {
    dressed_freq_ghz: Option<f64>,
    linewidth_mhz: Option<f64>,
    thermal_population: Option<f64>,
    drive_detuning_khz: Option<f64>,
    n_spins: Option<f64>,
    g_factor: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingSection {
    chi_qm_mhz: Option<f64>,
    g_qm_mhz: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoilSection {
    freq_at_zero_ghz: Option<f64>,
    slope_mhz_per_ma: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReadoutSection {
    p_e_ground: Option<f64>,
    p_e_excited: Option<f64>,
    tau_total_us: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyticsSection {
    qubit_linewidth_mhz: Option<f64>,
    drive_detuning_khz: Option<f64>,
    p_e_ground: Option<f64>,
    p_e_excited: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CavitySection {
    bare_freq_ghz: f64,
    dressed_freq_ghz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    linewidth_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_coupling_mhz: Option<f64>,
    g_qubit_mhz: f64,
    g_magnon_mhz: f64,
}

fn required(v: Option<f64>, base: Option<f64>, field: &str) -> Result<f64> {
    v.or(base)
        .ok_or_else(|| Error::ParameterFile(format!("missing key `{field}`")))
}

impl ParamFile {
    fn apply(self, base: Option<DeviceParams>) -> Result<DeviceParams> {
        let b = base.as_ref();
        let q = self.qubit;
        let m = self.magnon;
        let c = self.coupling;
        let coil = self.coil;
        let r = self.readout;
        let a = self.analytics;

        let cavity_modes = match self.cavity {
            Some(list) => list
                .into_iter()
                .map(|s| CavityMode {
                    omega_p: ghz(s.bare_freq_ghz),
                    omega_p_dressed: ghz(s.dressed_freq_ghz),
                    kappa_p: s.linewidth_mhz.map(mhz),
                    kappa_p_in: s.input_coupling_mhz.map(mhz),
                    g_qp: mhz(s.g_qubit_mhz),
                    g_mp: mhz(s.g_magnon_mhz),
                })
                .collect(),
            None => match b {
                Some(b) => b.cavity_modes.clone(),
                None => return Err(Error::ParameterFile("missing [[cavity]] tables".into())),
            },
        };

        Ok(DeviceParams {
            omega_q: ghz(required(q.bare_freq_ghz, b.map(|b| to_ghz(b.omega_q)), "qubit.bare_freq_ghz")?),
            alpha: ghz(required(
                q.bare_anharmonicity_ghz,
                b.map(|b| to_ghz(b.alpha)),
                "qubit.bare_anharmonicity_ghz",
            )?),
            omega_q0: ghz(required(q.dressed_freq_ghz, b.map(|b| to_ghz(b.omega_q0)), "qubit.dressed_freq_ghz")?),
            alpha0: mhz(required(
                q.dressed_anharmonicity_mhz,
                b.map(|b| to_mhz(b.alpha0)),
                "qubit.dressed_anharmonicity_mhz",
            )?),
            gamma_q: mhz(required(q.linewidth_mhz, b.map(|b| to_mhz(b.gamma_q)), "qubit.linewidth_mhz")?),
            t1: US * required(q.t1_us, b.map(|b| b.t1 / US), "qubit.t1_us")?,
            n_q_th: required(q.thermal_population, b.map(|b| b.n_q_th), "qubit.thermal_population")?,
            omega_m_g: ghz(required(m.dressed_freq_ghz, b.map(|b| to_ghz(b.omega_m_g)), "magnon.dressed_freq_ghz")?),
            gamma_m: mhz(required(m.linewidth_mhz, b.map(|b| to_mhz(b.gamma_m)), "magnon.linewidth_mhz")?),
            n_m_th: required(m.thermal_population, b.map(|b| b.n_m_th), "magnon.thermal_population")?,
            delta_d: khz(required(
                m.drive_detuning_khz,
                b.map(|b| to_khz(b.delta_d)),
                "magnon.drive_detuning_khz",
            )?),
            n_spins: required(m.n_spins, b.map(|b| b.n_spins), "magnon.n_spins")?,
            g_factor: required(m.g_factor, b.map(|b| b.g_factor), "magnon.g_factor")?,
            chi_qm: mhz(required(c.chi_qm_mhz, b.map(|b| to_mhz(b.chi_qm)), "coupling.chi_qm_mhz")?),
            g_qm: mhz(required(c.g_qm_mhz, b.map(|b| to_mhz(b.g_qm)), "coupling.g_qm_mhz")?),
            coil: CoilMap {
                omega_m_at_zero: ghz(required(
                    coil.freq_at_zero_ghz,
                    b.map(|b| to_ghz(b.coil.omega_m_at_zero)),
                    "coil.freq_at_zero_ghz",
                )?),
                // MHz/mA and rad/s per A differ by 2 pi 1e6 / 1e-3
                xi: mhz(required(
                    coil.slope_mhz_per_ma,
                    b.map(|b| to_mhz(b.coil.xi) * 1e-3),
                    "coil.slope_mhz_per_ma",
                )?) * 1e3,
            },
            p_e_ground: required(r.p_e_ground, b.map(|b| b.p_e_ground), "readout.p_e_ground")?,
            p_e_excited: required(r.p_e_excited, b.map(|b| b.p_e_excited), "readout.p_e_excited")?,
            tau_total: US * required(r.tau_total_us, b.map(|b| b.tau_total / US), "readout.tau_total_us")?,
            analytics: AnalyticsColumn {
                gamma_q: mhz(required(
                    a.qubit_linewidth_mhz,
                    b.map(|b| to_mhz(b.analytics.gamma_q)),
                    "analytics.qubit_linewidth_mhz",
                )?),
                delta_d: khz(required(
                    a.drive_detuning_khz,
                    b.map(|b| to_khz(b.analytics.delta_d)),
                    "analytics.drive_detuning_khz",
                )?),
                p_e_ground: required(a.p_e_ground, b.map(|b| b.analytics.p_e_ground), "analytics.p_e_ground")?,
                p_e_excited: required(a.p_e_excited, b.map(|b| b.analytics.p_e_excited), "analytics.p_e_excited")?,
            },
            cavity_modes,
        })
    }

    fn from_params(p: &DeviceParams) -> Self {
        ParamFile {
            qubit: QubitSection {
                bare_freq_ghz: Some(to_ghz(p.omega_q)),
                bare_anharmonicity_ghz: Some(to_ghz(p.alpha)),
                dressed_freq_ghz: Some(to_ghz(p.omega_q0)),
                dressed_anharmonicity_mhz: Some(to_mhz(p.alpha0)),
                linewidth_mhz: Some(to_mhz(p.gamma_q)),
                t1_us: Some(p.t1 / US),
                thermal_population: Some(p.n_q_th),
            },
            magnon: MagnonSection {
                dressed_freq_ghz: Some(to_ghz(p.omega_m_g)),
                linewidth_mhz: Some(to_mhz(p.gamma_m)),
                thermal_population: Some(p.n_m_th),
                drive_detuning_khz: Some(to_khz(p.delta_d)),
                n_spins: Some(p.n_spins),
                g_factor: Some(p.g_factor),
            },
            coupling: CouplingSection {
                chi_qm_mhz: Some(to_mhz(p.chi_qm)),
                g_qm_mhz: Some(to_mhz(p.g_qm)),
            },
            coil: CoilSection {
                freq_at_zero_ghz: Some(to_ghz(p.coil.omega_m_at_zero)),
                slope_mhz_per_ma: Some(to_mhz(p.coil.xi) * 1e-3),
            },
            readout: ReadoutSection {
                p_e_ground: Some(p.p_e_ground),
                p_e_excited: Some(p.p_e_excited),
                tau_total_us: Some(p.tau_total / US),
            },
            analytics: AnalyticsSection {
                qubit_linewidth_mhz: Some(to_mhz(p.analytics.gamma_q)),
                drive_detuning_khz: Some(to_khz(p.analytics.delta_d)),
                p_e_ground: Some(p.analytics.p_e_ground),
                p_e_excited: Some(p.analytics.p_e_excited),
            },
            cavity: Some(
                p.cavity_modes
                    .iter()
                    .map(|m| CavitySection {
                        bare_freq_ghz: to_ghz(m.omega_p),
                        dressed_freq_ghz: to_ghz(m.omega_p_dressed),
                        linewidth_mhz: m.kappa_p.map(to_mhz),
                        input_coupling_mhz: m.kappa_p_in.map(to_mhz),
                        g_qubit_mhz: to_mhz(m.g_qp),
                        g_magnon_mhz: to_mhz(m.g_mp),
                    })
                    .collect(),
            ),
        }
    }
}
