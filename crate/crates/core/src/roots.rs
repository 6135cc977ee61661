//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Root of `f` in `[lo, hi]` by false position with the Illinois
/// modification, falling back to bisection when interpolation stalls.
/// Stops when the bracket width is below `rel_tol * |x|`.
pub fn bracketed_root<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Domain("non-finite function value at bracket end".into()));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoRootInBracket { lo, hi });
    }
    // Which end was retained on the previous step: -1 = a, 1 = b.
    let mut side = 0i8;
    for _ in 0..500 {
        let mut x = (a * fb - b * fa) / (fb - fa);
        let width = b - a;
        // Keep the interpolant away from the ends so the bracket always shrinks.
        if !x.is_finite() || x <= a + 1e-3 * width || x >= b - 1e-3 * width {
            x = 0.5 * (a + b);
        }
        let fx = f(x);
        if !fx.is_finite() {
            return Err(Error::Domain(format!("non-finite function value at {x:e}")));
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        let mid = 0.5 * (a + b);
        if (b - a) <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) {
            return Ok(mid);
        }
    }
    Ok(0.5 * (a + b))
}
