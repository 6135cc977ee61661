//! Compressed-row complex matrices and Liouville-space superoperators.
//!
//! Density matrices are vectorised row-major: ρ_ij sits at index i·d + j.

use magnon_core::CMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<Complex64>,
}

impl CsrMatrix {
    /// Square matrix from (row, col, value) entries. Duplicates are summed
    /// and exact zeros dropped.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, Complex64)>) -> Self {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(entries.len());
        let mut val: Vec<Complex64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            assert!(r < n && c < n, "entry ({r}, {c}) outside {n}×{n}");
            if last == Some((r, c)) {
                *val.last_mut().expect("previous entry") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col.push(c);
            val.push(v);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = Self { n, row_ptr, col, val };
        m.prune();
        m
    }

    fn prune(&mut self) {
        if self.val.iter().all(|v| *v != ZERO) {
            return;
        }
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col = Vec::with_capacity(self.col.len());
        let mut val = Vec::with_capacity(self.val.len());
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.val[k] != ZERO {
                    col.push(self.col[k]);
                    val.push(self.val[k]);
                }
            }
            row_ptr[r + 1] = col.len();
        }
        self.row_ptr = row_ptr;
        self.col = col;
        self.val = val;
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_triplets(n, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col[k], self.val[k])))
    }

    /// Σ_k s_k A_k.
    pub fn combine(terms: &[(&CsrMatrix, Complex64)]) -> Self {
        let n = terms.first().map_or(0, |(m, _)| m.n);
        let entries = terms
            .iter()
            .flat_map(|(m, s)| {
                assert_eq!(m.n, n, "dimension mismatch");
                m.triplets().map(move |(r, c, v)| (r, c, v * s))
            })
            .collect();
        Self::from_triplets(n, entries)
    }

    /// y = A x
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            *out = acc;
        }
    }

    /// y += s A x
    pub fn apply_add(&self, x: &[Complex64], s: f64, y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            *out += acc * s;
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }
}

fn nonzeros(a: &CMatrix) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let v = a[(i, j)];
            if v != ZERO {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// ρ ↦ A ρ
fn left(a: &CMatrix, s: Complex64, out: &mut Vec<(usize, usize, Complex64)>) {
    let d = a.nrows();
    for (i, k, v) in nonzeros(a) {
        for j in 0..d {
            out.push((i * d + j, k * d + j, s * v));
        }
    }
}

/// ρ ↦ ρ B
fn right(b: &CMatrix, s: Complex64, out: &mut Vec<(usize, usize, Complex64)>) {
    let d = b.nrows();
    for (k, j, v) in nonzeros(b) {
        for i in 0..d {
            out.push((i * d + j, i * d + k, s * v));
        }
    }
}

/// −i[H, ρ]
pub fn commutator_superop(h: &CMatrix) -> CsrMatrix {
    let d = h.nrows();
    let mut t = Vec::new();
    left(h, -I, &mut t);
    right(h, I, &mut t);
    CsrMatrix::from_triplets(d * d, t)
}

/// rate · (L ρ L† − ½{L†L, ρ})
pub fn dissipator_superop(l: &CMatrix, rate: f64) -> CsrMatrix {
    let d = l.nrows();
    let s = Complex64::new(rate, 0.0);
    let mut t = Vec::new();
    let nz = nonzeros(l);
    for &(i, k, a) in &nz {
        for &(j, l_, b) in &nz {
            // (L ρ L†)_ij = Σ L_ik ρ_kl conj(L_jl)
            t.push((i * d + j, k * d + l_, s * a * b.conj()));
        }
    }
    let ldl = l.adjoint() * l;
    left(&ldl, -0.5 * s, &mut t);
    right(&ldl, -0.5 * s, &mut t);
    CsrMatrix::from_triplets(d * d, t)
}

/// Row-major vectorisation.
pub fn vectorize(rho: &CMatrix) -> Vec<Complex64> {
    let d = rho.nrows();
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            v.push(rho[(i, j)]);
        }
    }
    v
}

pub fn unvectorize(v: &[Complex64], d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// Tr ρ from the vectorised form.
pub fn vec_trace(v: &[Complex64], d: usize) -> Complex64 {
    (0..d).map(|i| v[i * d + i]).sum()
}
