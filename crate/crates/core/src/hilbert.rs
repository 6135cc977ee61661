//! Truncated transmon ⊗ magnon Hilbert space, ladder operators and the
//! density-matrix carrier.
//!
//! Basis ordering puts the qubit factor leftmost: index = q * n_m + m.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Level counts for the reduced qubit ⊗ magnon space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HilbertSpec {
    pub n_q_levels: usize,
    pub n_m_levels: usize,
    /// Levels per included cavity mode. Only used by hybrid diagonalization.
    pub include_cavity: Option<usize>,
}

impl HilbertSpec {
    pub fn new(n_q_levels: usize, n_m_levels: usize) -> Result<Self> {
        let spec = Self {
            n_q_levels,
            n_m_levels,
            include_cavity: None,
        };
        spec.check()?;
        Ok(spec)
    }

    /// Default truncation for the calibration drive.
    pub fn calibration() -> Self {
        Self {
            n_q_levels: 3,
            n_m_levels: 12,
            include_cavity: None,
        }
    }

    /// Default truncation for the weak sensing drives.
    pub fn sensing() -> Self {
        Self {
            n_q_levels: 3,
            n_m_levels: 6,
            include_cavity: None,
        }
    }

    /// Smallest magnon truncation whose Poisson tail at `n_bar` is below `tol`.
    pub fn for_coherent(n_q_levels: usize, n_bar: f64, tol: f64) -> Result<Self> {
        let mut n = 2;
        while poisson_tail(n_bar, n) >= tol {
            n += 1;
        }
        Self::new(n_q_levels, n)
    }

    pub fn check(&self) -> Result<()> {
        if !(2..=3).contains(&self.n_q_levels) {
            return Err(Error::QubitLevels(self.n_q_levels));
        }
        if self.n_m_levels < 2 {
            return Err(Error::invalid("n_m_levels", "at least 2 magnon levels required"));
        }
        if let Some(c) = self.include_cavity {
            if c < 2 {
                return Err(Error::invalid("include_cavity", "at least 2 levels per cavity mode"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n_q_levels * self.n_m_levels
    }

    /// Whether a coherent state of mean `n_bar` fits with tail weight < 1e-6.
    pub fn admits_coherent(&self, n_bar: f64) -> bool {
        poisson_tail(n_bar, self.n_m_levels) < 1e-6
    }
}

/// Σ_{k ≥ cutoff} e^{-n} n^k / k!.
pub fn poisson_tail(n_bar: f64, cutoff: usize) -> f64 {
    if n_bar <= 0.0 {
        return if cutoff == 0 { 1.0 } else { 0.0 };
    }
    // Sum the head and subtract, unless the head is tiny relative to 1.
    let mut term = (-n_bar).exp();
    let mut head = 0.0;
    for k in 0..cutoff {
        head += term;
        term *= n_bar / (k + 1) as f64;
    }
    let by_head = 1.0 - head;
    if by_head > 1e-8 {
        return by_head;
    }
    // Direct tail summation avoids cancellation.
    let mut tail = 0.0;
    let mut k = cutoff;
    while term > 1e-300 && k < cutoff + 400 {
        tail += term;
        k += 1;
        term *= n_bar / k as f64;
        if term < tail * 1e-17 {
            break;
        }
    }
    tail
}

fn ladder(n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// Kronecker product with `a` as the left factor.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Dense operators on the qubit ⊗ magnon space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub spec: HilbertSpec,
    pub b: CMatrix,
    pub b_dag: CMatrix,
    pub c: CMatrix,
    pub c_dag: CMatrix,
    pub n_q: CMatrix,
    pub n_m: CMatrix,
    pub proj_g: CMatrix,
    pub proj_e: CMatrix,
    /// Zero matrix when the transmon has two levels.
    pub proj_f: CMatrix,
    /// |e⟩⟨f| + |f⟩⟨e|; zero for two levels.
    pub flip_ef: CMatrix,
    pub identity: CMatrix,
}

pub fn build_operators(spec: HilbertSpec) -> Result<OperatorSet> {
    spec.check()?;
    let nq = spec.n_q_levels;
    let nm = spec.n_m_levels;
    let iq = CMatrix::identity(nq, nq);
    let im = CMatrix::identity(nm, nm);
    let bq = ladder(nq);
    let cm = ladder(nm);

    let proj = |k: usize| {
        let mut p = CMatrix::zeros(nq, nq);
        if k < nq {
            p[(k, k)] = ONE;
        }
        kron(&p, &im)
    };
    let mut ef = CMatrix::zeros(nq, nq);
    if nq > 2 {
        ef[(1, 2)] = ONE;
        ef[(2, 1)] = ONE;
    }

    let b = kron(&bq, &im);
    let c = kron(&iq, &cm);
    let b_dag = b.adjoint();
    let c_dag = c.adjoint();
    Ok(OperatorSet {
        spec,
        n_q: &b_dag * &b,
        n_m: &c_dag * &c,
        proj_g: proj(0),
        proj_e: proj(1),
        proj_f: proj(2),
        flip_ef: kron(&ef, &im),
        identity: CMatrix::identity(spec.dim(), spec.dim()),
        b,
        b_dag,
        c,
        c_dag,
    })
}

/// Dense density matrix with validity checks.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix after checking the density-matrix invariants.
    pub fn new(entries: CMatrix) -> Result<Self> {
        let rho = Self { entries };
        rho.check()?;
        Ok(rho)
    }

    /// Wraps without validation. Callers must check before relying on it.
    pub fn from_matrix_unchecked(entries: CMatrix) -> Self {
        Self { entries }
    }

    /// Thermal qubit (geometric occupation n_th) ⊗ magnon vacuum.
    pub fn thermal_qubit_vacuum(spec: HilbertSpec, n_th: f64) -> Result<Self> {
        spec.check()?;
        let nq = spec.n_q_levels;
        let mut w: Vec<f64> = (0..nq)
            .map(|k| n_th.powi(k as i32) / (1.0 + n_th).powi(k as i32 + 1))
            .collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let mut rho = CMatrix::zeros(spec.dim(), spec.dim());
        for (q, wq) in w.iter().enumerate() {
            let i = q * spec.n_m_levels;
            rho[(i, i)] = Complex64::new(*wq, 0.0);
        }
        Self::new(rho)
    }

    /// Pure state |q⟩ ⊗ |m⟩.
    pub fn basis(spec: HilbertSpec, q: usize, m: usize) -> Result<Self> {
        spec.check()?;
        if q >= spec.n_q_levels || m >= spec.n_m_levels {
            return Err(Error::invalid("basis", "level index out of range"));
        }
        let mut rho = CMatrix::zeros(spec.dim(), spec.dim());
        let i = q * spec.n_m_levels + m;
        rho[(i, i)] = ONE;
        Ok(Self { entries: rho })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Re Tr(O ρ) without forming the product.
    pub fn expect(&self, op: &CMatrix) -> f64 {
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += op[(i, j)] * self.entries[(j, i)];
            }
        }
        acc.re
    }

    /// max |ρ - ρ†| relative to max |ρ|.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let a = self.entries[(i, j)];
                worst = worst.max((a - self.entries[(j, i)].conj()).norm());
                scale = scale.max(a.norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check(&self) -> Result<()> {
        if !self.entries.is_square() || self.dim() == 0 {
            return Err(Error::Domain("density matrix must be square and nonempty".into()));
        }
        if self.entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("density matrix has non-finite entries".into()));
        }
        let h = self.hermiticity_error();
        if h > 1e-12 {
            return Err(Error::Domain(format!("density matrix not Hermitian: {h:e}")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::Domain(format!("density matrix trace {tr}")));
        }
        let lmin = self.min_eigenvalue();
        if lmin < -1e-8 {
            return Err(Error::Domain(format!("density matrix not positive: {lmin:e}")));
        }
        Ok(())
    }

    /// ½ ‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let diff = &self.entries - &other.entries;
        let h = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
        0.5 * h.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
    }

    /// Reduced state of the magnon mode.
    pub fn magnon_populations(&self, spec: HilbertSpec) -> Vec<f64> {
        let nm = spec.n_m_levels;
        (0..nm)
            .map(|m| {
                (0..spec.n_q_levels)
                    .map(|q| self.entries[(q * nm + m, q * nm + m)].re)
                    .sum()
            })
            .collect()
    }

    /// Diagonal qubit populations (p_g, p_e, p_f).
    pub fn qubit_populations(&self, spec: HilbertSpec) -> [f64; 3] {
        let nm = spec.n_m_levels;
        let mut out = [0.0; 3];
        for (q, slot) in out.iter_mut().enumerate().take(spec.n_q_levels) {
            *slot = (0..nm).map(|m| self.entries[(q * nm + m, q * nm + m)].re).sum();
        }
        out
    }
}
