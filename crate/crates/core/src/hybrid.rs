//! Multimode Jaynes–Cummings model of the transmon, Kittel mode and cavity
//! modes, with the closed-form characterization formulas.
//!
//! All couplings are rotating-wave, so the Hamiltonian is block diagonal in
//! the total excitation number. Dressed quantities only need the one- and
//! two-excitation blocks, which keeps diagonalization cheap.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::params::{CavityMode, DeviceParams};
use crate::units::HBAR;

/// Which physical mode a tensor factor represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeLabel {
    Qubit,
    Magnon,
    /// Index into the configured cavity-mode list (0-based).
    Cavity(usize),
}

/// Inputs for building a [`FullHamiltonian`]. Frequencies in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub omega_q: f64,
    pub alpha: f64,
    pub omega_m: f64,
    /// Direct qubit-magnon coupling, zero when mediated through cavities.
    pub g_qm_direct: f64,
    pub cavities: Vec<CavityMode>,
    pub n_q_levels: usize,
    pub n_m_levels: usize,
    pub n_c_levels: usize,
}

impl HybridModel {
    /// Bare qubit and cavity parameters with the first `n_modes` cavity modes.
    pub fn from_params(params: &DeviceParams, n_modes: usize) -> Self {
        Self {
            omega_q: params.omega_q,
            alpha: params.alpha,
            omega_m: params.omega_m_g,
            g_qm_direct: 0.0,
            cavities: params.cavity_modes.iter().take(n_modes).cloned().collect(),
            n_q_levels: 3,
            n_m_levels: 3,
            n_c_levels: 2,
        }
    }

    /// Qubit and magnon coupled directly, no cavity modes.
    pub fn reduced(omega_q: f64, alpha: f64, omega_m: f64, g_qm: f64, n_q_levels: usize) -> Self {
        Self {
            omega_q,
            alpha,
            omega_m,
            g_qm_direct: g_qm,
            cavities: Vec::new(),
            n_q_levels,
            n_m_levels: 3,
            n_c_levels: 2,
        }
    }

    pub fn with_omega_m(&self, omega_m: f64) -> Self {
        Self {
            omega_m,
            ..self.clone()
        }
    }

    /// Scales every coupling by `s`.
    pub fn scaled_couplings(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.g_qm_direct *= s;
        for c in &mut out.cavities {
            c.g_qp *= s;
            c.g_mp *= s;
        }
        out
    }

    pub fn build(&self) -> Result<FullHamiltonian> {
        if !(2..=3).contains(&self.n_q_levels) {
            return Err(Error::QubitLevels(self.n_q_levels));
        }
        let mut modes = vec![ModeLabel::Qubit, ModeLabel::Magnon];
        let mut levels = vec![self.n_q_levels, self.n_m_levels];
        for p in 0..self.cavities.len() {
            modes.push(ModeLabel::Cavity(p));
            levels.push(self.n_c_levels);
        }
        let dim: usize = levels.iter().product();
        let mut h = DMatrix::<f64>::zeros(dim, dim);

        let occupations: Vec<Vec<usize>> = (0..dim).map(|i| decompose(i, &levels)).collect();
        for (i, occ) in occupations.iter().enumerate() {
            let q = occ[0] as f64;
            let mut e = self.omega_q * q + 0.5 * self.alpha * q * (q - 1.0);
            e += self.omega_m * occ[1] as f64;
            for (p, cav) in self.cavities.iter().enumerate() {
                e += cav.omega_p * occ[2 + p] as f64;
            }
            h[(i, i)] = e;
        }

        // Exchange terms g (x† y + y† x) between factors x and y.
        let mut pairs: Vec<(usize, usize, f64)> = vec![(0, 1, self.g_qm_direct)];
        for (p, cav) in self.cavities.iter().enumerate() {
            pairs.push((0, 2 + p, cav.g_qp));
            pairs.push((1, 2 + p, cav.g_mp));
        }
        for (x, y, g) in pairs {
            if g == 0.0 {
                continue;
            }
            for (i, occ) in occupations.iter().enumerate() {
                // x† y |occ⟩
                if occ[y] == 0 || occ[x] + 1 >= levels[x] {
                    continue;
                }
                let mut to = occ.clone();
                to[y] -= 1;
                to[x] += 1;
                let amp = g * ((occ[y] as f64) * (to[x] as f64)).sqrt();
                let j = compose(&to, &levels);
                h[(j, i)] += amp;
                h[(i, j)] += amp;
            }
        }

        let excitation = occupations.iter().map(|o| o.iter().sum()).collect();
        Ok(FullHamiltonian {
            matrix: h,
            modes,
            levels,
            excitation,
        })
    }
}

fn decompose(mut i: usize, levels: &[usize]) -> Vec<usize> {
    let mut occ = vec![0; levels.len()];
    for k in (0..levels.len()).rev() {
        occ[k] = i % levels[k];
        i /= levels[k];
    }
    occ
}

fn compose(occ: &[usize], levels: &[usize]) -> usize {
    occ.iter().zip(levels).fold(0, |acc, (o, l)| acc * l + o)
}

/// Dense Hamiltonian over qubit ⊗ magnon ⊗ cavities, in units of ħ.
#[derive(Debug, Clone, PartialEq)]
pub struct FullHamiltonian {
    pub matrix: DMatrix<f64>,
    pub modes: Vec<ModeLabel>,
    pub levels: Vec<usize>,
    /// Total excitation number of each basis state.
    pub excitation: Vec<usize>,
}

impl FullHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Basis index of the product state with qubit level `q`, magnon Fock
    /// `m` and all cavities empty.
    pub fn index_of(&self, q: usize, m: usize) -> usize {
        let mut occ = vec![0; self.levels.len()];
        occ[0] = q;
        occ[1] = m;
        compose(&occ, &self.levels)
    }

    /// Basis indices with the given total excitation number.
    pub fn block_indices(&self, n: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.excitation[i] == n).collect()
    }

    /// Largest entry of [H, N_total].
    pub fn number_commutator_norm(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let c = self.matrix[(i, j)] * (self.excitation[j] as f64 - self.excitation[i] as f64);
                worst = worst.max(c.abs());
            }
        }
        worst
    }

    /// Eigenpairs of one excitation block, eigenvectors in block coordinates.
    fn block_eigen(&self, n: usize) -> Result<(Vec<usize>, SymmetricEigen<f64, nalgebra::Dyn>)> {
        let idx = self.block_indices(n);
        let k = idx.len();
        let sub = DMatrix::from_fn(k, k, |a, b| self.matrix[(idx[a], idx[b])]);
        if sub.iter().any(|x| !x.is_finite()) {
            return Err(Error::Eigensolver);
        }
        let eig = SymmetricEigen::try_new(sub, 1e-14, 10_000).ok_or(Error::Eigensolver)?;
        Ok((idx, eig))
    }
}

/// One bare-to-dressed label.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub label: String,
    pub energy: f64,
    /// Weight of the bare state (or bare pair, for hybridized branches).
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DressedQuantities {
    /// Half the splitting between the qubit-like and magnon-like branches.
    /// Equals the effective coupling when the branches are tuned to resonance.
    pub g_qm_numeric: f64,
    /// (E(e,1) − E(e,0) − E(g,1) + E(g,0)) / 2. `None` when |e,1⟩ cannot be labeled.
    pub chi_qm_numeric: Option<f64>,
    /// All eigenvalues of the zero-, one- and two-excitation blocks, ascending.
    pub energies: Vec<f64>,
    pub assignments: Vec<Assignment>,
}

fn best_overlap(eig: &SymmetricEigen<f64, nalgebra::Dyn>, local: usize) -> (usize, f64) {
    let mut best = (0, -1.0);
    for k in 0..eig.eigenvalues.len() {
        let w = eig.eigenvectors[(local, k)].powi(2);
        if w > best.1 {
            best = (k, w);
        }
    }
    best
}

/// Extracts dressed energies, the qubit-magnon splitting and the dispersive shift.
pub fn diagonalize(h: &FullHamiltonian) -> Result<DressedQuantities> {
    if h.matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("Hamiltonian has non-finite entries".into()));
    }
    let mut energies = Vec::new();
    let mut assignments = Vec::new();

    let (idx0, eig0) = h.block_eigen(0)?;
    let e_g0 = eig0.eigenvalues[0];
    energies.extend(eig0.eigenvalues.iter());
    debug_assert_eq!(idx0.len(), 1);
    assignments.push(Assignment {
        label: "g0".into(),
        energy: e_g0,
        overlap: 1.0,
    });

    let (idx1, eig1) = h.block_eigen(1)?;
    energies.extend(eig1.eigenvalues.iter());
    let local = |idx: &[usize], global: usize| idx.iter().position(|&i| i == global).expect("state in block");
    let l_e0 = local(&idx1, h.index_of(1, 0));
    let l_g1 = local(&idx1, h.index_of(0, 1));

    let (k_e0, w_e0) = best_overlap(&eig1, l_e0);
    let (k_g1, w_g1) = best_overlap(&eig1, l_g1);
    let (e_e0, e_g1, hybridized) = if k_e0 != k_g1 && w_e0 >= 0.5 && w_g1 >= 0.5 {
        assignments.push(Assignment {
            label: "e0".into(),
            energy: eig1.eigenvalues[k_e0],
            overlap: w_e0,
        });
        assignments.push(Assignment {
            label: "g1".into(),
            energy: eig1.eigenvalues[k_g1],
            overlap: w_g1,
        });
        (eig1.eigenvalues[k_e0], eig1.eigenvalues[k_g1], false)
    } else {
        // Near resonance each dressed branch is an equal mixture of |e0⟩ and
        // |g1⟩, so label by weight in their joint span instead.
        let mut weights: Vec<(usize, f64)> = (0..eig1.eigenvalues.len())
            .map(|k| {
                (
                    k,
                    eig1.eigenvectors[(l_e0, k)].powi(2) + eig1.eigenvectors[(l_g1, k)].powi(2),
                )
            })
            .collect();
        weights.sort_by(|a, b| b.1.total_cmp(&a.1));
        for &(_, w) in &weights[..2] {
            if w < 0.5 {
                return Err(Error::Assignment {
                    label: "e0/g1".into(),
                    overlap: w,
                });
            }
        }
        let (ka, kb) = (weights[0].0, weights[1].0);
        let (lo, hi) = if eig1.eigenvalues[ka] < eig1.eigenvalues[kb] { (ka, kb) } else { (kb, ka) };
        for (label, k) in [("lower", lo), ("upper", hi)] {
            assignments.push(Assignment {
                label: label.into(),
                energy: eig1.eigenvalues[k],
                overlap: weights.iter().find(|w| w.0 == k).unwrap().1,
            });
        }
        (eig1.eigenvalues[hi], eig1.eigenvalues[lo], true)
    };
    let g_qm_numeric = 0.5 * (e_e0 - e_g1).abs();

    let mut chi_qm_numeric = None;
    if h.levels[1] > 1 && !hybridized {
        let (idx2, eig2) = h.block_eigen(2)?;
        energies.extend(eig2.eigenvalues.iter());
        let l_e1 = local(&idx2, h.index_of(1, 1));
        let (k_e1, w_e1) = best_overlap(&eig2, l_e1);
        if w_e1 >= 0.5 {
            let e_e1 = eig2.eigenvalues[k_e1];
            assignments.push(Assignment {
                label: "e1".into(),
                energy: e_e1,
                overlap: w_e1,
            });
            chi_qm_numeric = Some(0.5 * (e_e1 - e_e0 - e_g1 + e_g0));
        }
    }

    energies.sort_by(f64::total_cmp);
    Ok(DressedQuantities {
        g_qm_numeric,
        chi_qm_numeric,
        energies,
        assignments,
    })
}

/// Tunes the magnon frequency to the avoided crossing with the qubit and
/// diagonalizes there. `window` is the search half-width around `omega_q`.
pub fn diagonalize_at_resonance(model: &HybridModel, window: f64) -> Result<(f64, DressedQuantities)> {
    let splitting = |wm: f64| -> Result<f64> {
        let h = model.with_omega_m(wm).build()?;
        let d = diagonalize(&h)?;
        Ok(d.g_qm_numeric)
    };
    // Golden-section search; the splitting is unimodal across the crossing.
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (model.omega_q - window, model.omega_q + window);
    let mut x1 = b - invphi * (b - a);
    let mut x2 = a + invphi * (b - a);
    let mut f1 = splitting(x1)?;
    let mut f2 = splitting(x2)?;
    while (b - a) > 1e-10 * model.omega_q.abs() {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = splitting(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = splitting(x2)?;
        }
    }
    let wm = 0.5 * (a + b);
    let d = diagonalize(&model.with_omega_m(wm).build()?)?;
    Ok((wm, d))
}

/// Σ_p g_q–p g_m–p / (ω_p − ω_qm) over all configured cavity modes.
pub fn g_qm_perturbative(params: &DeviceParams, omega_qm: f64) -> Result<f64> {
    let mut g = 0.0;
    for cav in &params.cavity_modes {
        let det = cav.omega_p - omega_qm;
        if det == 0.0 {
            return Err(Error::Resonance {
                what: "cavity-mediated qubit-magnon coupling",
                detuning: det,
            });
        }
        g += cav.g_qp * cav.g_mp / det;
    }
    Ok(g)
}

/// α₀ g² / (Δ (Δ + α₀)), Δ = ω_q − ω_m.
pub fn chi_perturbative(alpha0: f64, g_qm: f64, delta_qm: f64) -> Result<f64> {
    let dpa = delta_qm + alpha0;
    if delta_qm == 0.0 || dpa == 0.0 {
        return Err(Error::Straddle {
            delta: delta_qm,
            delta_plus_alpha: dpa,
        });
    }
    Ok(alpha0 * g_qm * g_qm / (delta_qm * dpa))
}

/// Purcell relaxation rate Σ_p κ_p (g_q–p / (ω_p − ω_q))² over modes with a
/// known linewidth. Uses the bare qubit frequency.
pub fn purcell_rate(params: &DeviceParams) -> Result<f64> {
    let mut rate = 0.0;
    for cav in &params.cavity_modes {
        let Some(kappa) = cav.kappa_p else { continue };
        let det = cav.omega_p - params.omega_q;
        if det == 0.0 {
            return Err(Error::Resonance {
                what: "Purcell rate",
                detuning: det,
            });
        }
        rate += kappa * (cav.g_qp / det).powi(2);
    }
    Ok(rate)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitationStrengths {
    pub omega_d: f64,
    pub omega_ef: f64,
    /// |Ω_ef / Ω_d|.
    pub lambda_ef: f64,
}

/// Magnon and e–f excitation strengths for a drive of `power` watts at
/// `omega_d`, summed over the first `n_modes` cavity modes with an input
/// coupling. The qubit-magnon detuning is taken as ω_m − ω_q and the e–f
/// transition at ω_q + α, both bare. The second magnon term is applied
/// literally, with a real denominator √(Δ² + κ²).
pub fn excitation_strengths(
    power: f64,
    omega_d: f64,
    params: &DeviceParams,
    n_modes: usize,
) -> Result<ExcitationStrengths> {
    if !(power >= 0.0) {
        return Err(Error::invalid("power", "must be nonnegative"));
    }
    let prefactor = if power == 0.0 { 0.0 } else { (power / (HBAR * omega_d)).sqrt() };
    let delta_qm = params.omega_m_g - params.omega_q;
    let omega_ef = params.omega_q + params.alpha;
    let (mut cd, mut cef) = (0.0, 0.0);
    for cav in params.cavity_modes.iter().take(n_modes) {
        let Some(k_in) = cav.kappa_p_in else { continue };
        let kappa = cav.kappa_p.unwrap_or(0.0);
        let d_mp = params.omega_m_g - cav.omega_p;
        if d_mp == 0.0 || delta_qm == 0.0 || cav.omega_p == omega_ef {
            return Err(Error::Resonance {
                what: "excitation strength",
                detuning: 0.0,
            });
        }
        let sk = k_in.sqrt();
        cd += sk * (cav.g_mp / d_mp + params.g_qm * cav.g_qp / (delta_qm * (d_mp * d_mp + kappa * kappa).sqrt()));
        cef += sk * (2f64.sqrt() * cav.g_qp / (cav.omega_p - omega_ef));
    }
    if cd == 0.0 {
        return Err(Error::Domain("magnon drive coefficient vanishes".into()));
    }
    Ok(ExcitationStrengths {
        omega_d: prefactor * cd,
        omega_ef: prefactor * cef,
        lambda_ef: (cef / cd).abs(),
    })
}

/// Normalized cavity transmission near one mode hybridized with the Kittel mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionModel {
    pub omega_p: f64,
    pub kappa_p: f64,
    pub g_mp: f64,
    pub omega_m: f64,
    pub gamma_m: f64,
}

impl TransmissionModel {
    /// Mode `p` (0-based) of `params`, dressed frequency, Kittel mode at `omega_m`.
    pub fn from_params(params: &DeviceParams, p: usize, omega_m: f64) -> Result<Self> {
        let cav = params
            .cavity_modes
            .get(p)
            .ok_or_else(|| Error::invalid("cavity", format!("no mode {p}")))?;
        let kappa_p = cav
            .kappa_p
            .ok_or_else(|| Error::invalid(format!("cavity[{p}].linewidth_mhz"), "required for transmission"))?;
        Ok(Self {
            omega_p: cav.omega_p_dressed,
            kappa_p,
            g_mp: cav.g_mp,
            omega_m,
            gamma_m: params.gamma_m,
        })
    }

    pub fn eval(&self, omega: f64) -> f64 {
        use num_complex::Complex64 as C;
        let i = C::i();
        let magnon = i * (omega - self.omega_m) - C::new(self.gamma_m / 2.0, 0.0);
        let den = i * (omega - self.omega_p) - C::new(self.kappa_p / 2.0, 0.0) + self.g_mp * self.g_mp / magnon;
        (self.kappa_p / 2.0) / den.norm()
    }
}

/// Cavity transmission |t(ω)|/|t₀| for mode `p` with the Kittel mode at `omega_m`.
pub fn cavity_transmission_model(omega: f64, params: &DeviceParams, p: usize, omega_m: f64) -> Result<f64> {
    Ok(TransmissionModel::from_params(params, p, omega_m)?.eval(omega))
}

/// Qubit spectrum on resonance with the Kittel mode: two Lorentzians at
/// ω_q ± g with common width γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleLorentzian {
    pub omega_q: f64,
    pub g_qm: f64,
    pub gamma_qm: f64,
    pub c0: f64,
    pub offset: f64,
}

impl DoubleLorentzian {
    pub fn eval(&self, omega_s: f64) -> f64 {
        let h2 = self.gamma_qm * self.gamma_qm / 4.0;
        let l = |c: f64| h2 / ((omega_s - c).powi(2) + h2);
        self.c0 * (l(self.omega_q - self.g_qm) + l(self.omega_q + self.g_qm)) + self.offset
    }
}

pub fn double_lorentzian_model(omega_s: f64, model: &DoubleLorentzian) -> f64 {
    model.eval(omega_s)
}
