//! Stationary states from the trace-bordered Liouvillian.
//!
//! The row of L for ρ₀₀ is minus the sum of the other population rows, so
//! replacing it with the trace functional loses nothing. The bordered matrix
//! is invertible exactly when the kernel of L is one-dimensional, and its
//! solution for the first unit vector is the normalised steady state.

use crate::error::{Error, Result};
use crate::model::LindbladModel;
use crate::sparse::unvectorize;
use magnon_core::{CMatrix, DensityMatrix};
use nalgebra::{DVector, LU};
use num_complex::Complex64;

/// Smallest acceptable singular value of the bordered Liouvillian relative to ‖L‖₂.
pub const UNIQUENESS_RATIO: f64 = 1e-6;

const POWER_ITERATIONS: usize = 30;

/// Steady state with a constant magnon drive and no qubit drive.
pub fn steady_state(model: &LindbladModel, omega_d: f64) -> Result<DensityMatrix> {
    let d = model.dim();
    let mut m = model.generator(omega_d).dense(0.0, omega_d);
    let norm = spectral_norm(&m);
    if !(norm > 0.0) {
        return Err(Error::DegenerateSteadyState { ratio: 0.0 });
    }
    let weight = Complex64::new(norm / (d as f64).sqrt(), 0.0);
    m.row_mut(0).fill(Complex64::new(0.0, 0.0));
    for i in 0..d {
        m[(0, i * d + i)] = weight;
    }
    let lu = m.lu();
    let sigma = smallest_singular_value(&lu);
    let ratio = sigma / norm;
    if !(ratio > UNIQUENESS_RATIO) {
        return Err(Error::DegenerateSteadyState { ratio });
    }
    let mut b = DVector::zeros(d * d);
    b[0] = weight;
    let x = lu.solve(&b).ok_or(Error::DegenerateSteadyState { ratio: 0.0 })?;
    let rho = unvectorize(x.as_slice(), d);
    let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(DensityMatrix::new(rho)?)
}

/// ⟨c†c⟩ in the steady state.
pub fn steady_magnon_population(model: &LindbladModel, omega_d: f64) -> Result<f64> {
    let rho = steady_state(model, omega_d)?;
    Ok(rho.expect(&model.ops().n_m))
}

fn start_vector(n: usize) -> DVector<Complex64> {
    // Deterministic and not aligned with any basis or symmetry direction.
    DVector::from_fn(n, |i, _| Complex64::new(1.0 + 0.37 * (i as f64).sin(), 0.21 * (1.3 * i as f64).cos()))
}

/// ‖A‖₂ by power iteration on A†A.
fn spectral_norm(a: &CMatrix) -> f64 {
    let mut v = start_vector(a.ncols());
    let mut est = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        v /= Complex64::new(n, 0.0);
        let w = a * &v;
        est = w.norm();
        v = a.adjoint() * w;
    }
    est
}

/// σ_min of the factorised matrix by inverse iteration on (A†A)⁻¹.
fn smallest_singular_value(lu: &LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let l = lu.l();
    let u = lu.u();
    let mut v = start_vector(l.nrows());
    let mut growth = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return 0.0;
        }
        v /= Complex64::new(n, 0.0);
        // A† w = v with P A = L U, so A† = U† L† P.
        let Some(a) = u.ad_solve_upper_triangular(&v) else { return 0.0 };
        let Some(mut w) = l.ad_solve_lower_triangular(&a) else { return 0.0 };
        lu.p().inv_permute_rows(&mut w);
        let Some(next) = lu.solve(&w) else { return 0.0 };
        growth = next.norm();
        v = next;
    }
    if growth > 0.0 && growth.is_finite() {
        1.0 / growth.sqrt()
    } else {
        0.0
    }
}
