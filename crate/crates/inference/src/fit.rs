//! Bounded Levenberg–Marquardt least squares over a fixed set of model curves.

use crate::error::{Error, Result};
use magnon_core::analytic::{composite_spectrum, DispersiveAux};
use magnon_core::hybrid::{DoubleLorentzian, TransmissionModel};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Fock-space truncation used by the calibration spectrum fit.
pub const MULTI_FOCK_N_MAX: usize = 9;

/// Registered model curves. Parameter order follows [`Model::param_names`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// height·w²/((x−x₀)²+w²) + offset
    Lorentzian,
    /// Sum of Fock-resolved qubit lines, truncated at `n_max`.
    MultiFock { n_max: usize },
    /// a·e^{−x/T} + offset
    ExpDecay,
    /// offset + a·cos(Δx)·e^{−x/T₂}
    Ramsey,
    /// Vacuum-Rabi doublet in qubit spectroscopy.
    DoubleLorentzian,
    /// Cavity transmission magnitude with a coupled Kittel mode.
    Transmission,
    /// ½ΔV[1 − cos(πA/A_π)]
    PiCal,
    /// S/√T
    AllanPowerlaw,
    /// p₀ + slope·n̄
    LinearEta,
}

impl Model {
    pub const ALL: [Model; 9] = [
        Model::Lorentzian,
        Model::MultiFock { n_max: MULTI_FOCK_N_MAX },
        Model::ExpDecay,
        Model::Ramsey,
        Model::DoubleLorentzian,
        Model::Transmission,
        Model::PiCal,
        Model::AllanPowerlaw,
        Model::LinearEta,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Model::Lorentzian => "lorentzian",
            Model::MultiFock { .. } => "multi_fock_spectrum",
            Model::ExpDecay => "exp_decay",
            Model::Ramsey => "ramsey",
            Model::DoubleLorentzian => "double_lorentzian",
            Model::Transmission => "transmission",
            Model::PiCal => "pi_cal",
            Model::AllanPowerlaw => "allan_powerlaw",
            Model::LinearEta => "linear_eta",
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Model::Lorentzian => &["center", "hwhm", "height", "offset"],
            Model::MultiFock { .. } => &[
                "delta_s0", "chi", "gamma_m", "n_bar", "scale", "offset", "gamma_q", "delta_d",
            ],
            Model::ExpDecay => &["amplitude", "t_decay", "offset"],
            Model::Ramsey => &["delta", "t2", "amplitude", "offset"],
            Model::DoubleLorentzian => &["omega_q", "g_qm", "gamma_qm", "c0", "offset"],
            Model::Transmission => &["omega_p", "kappa_p", "g_mp", "omega_m", "gamma_m"],
            Model::PiCal => &["delta_v", "a_pi"],
            Model::AllanPowerlaw => &["s"],
            Model::LinearEta => &["p0", "slope"],
        }
    }

    pub fn n_params(&self) -> usize {
        self.param_names().len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.param_names().iter().position(|n| *n == name)
    }

    /// Model value at one abscissa; NaN where the parameters are unphysical.
    pub fn eval(&self, x: f64, p: &[f64]) -> f64 {
        self.eval_many(&[x], p)[0]
    }

    pub fn eval_many(&self, xs: &[f64], p: &[f64]) -> Vec<f64> {
        assert_eq!(p.len(), self.n_params(), "{} takes {} parameters", self.name(), self.n_params());
        match *self {
            Model::Lorentzian => xs
                .iter()
                .map(|&x| {
                    let w2 = p[1] * p[1];
                    p[2] * w2 / ((x - p[0]).powi(2) + w2) + p[3]
                })
                .collect(),
            Model::MultiFock { n_max } => match DispersiveAux::with_population(p[1], p[2], p[7], p[3]) {
                Ok(aux) => xs
                    .iter()
                    .map(|&x| composite_spectrum(x, p[0], &aux, p[6], p[4], p[5], n_max))
                    .collect(),
                Err(_) => vec![f64::NAN; xs.len()],
            },
            Model::ExpDecay => xs.iter().map(|&x| p[0] * (-x / p[1]).exp() + p[2]).collect(),
            Model::Ramsey => xs
                .iter()
                .map(|&x| p[3] + p[2] * (p[0] * x).cos() * (-x / p[1]).exp())
                .collect(),
            Model::DoubleLorentzian => {
                let m = DoubleLorentzian {
                    omega_q: p[0],
                    g_qm: p[1],
                    gamma_qm: p[2],
                    c0: p[3],
                    offset: p[4],
                };
                xs.iter().map(|&x| m.eval(x)).collect()
            }
            Model::Transmission => {
                let m = TransmissionModel {
                    omega_p: p[0],
                    kappa_p: p[1],
                    g_mp: p[2],
                    omega_m: p[3],
                    gamma_m: p[4],
                };
                xs.iter().map(|&x| m.eval(x)).collect()
            }
            Model::PiCal => xs
                .iter()
                .map(|&x| 0.5 * p[0] * (1.0 - (PI * x / p[1]).cos()))
                .collect(),
            Model::AllanPowerlaw => xs.iter().map(|&x| p[0] / x.sqrt()).collect(),
            Model::LinearEta => xs.iter().map(|&x| p[0] + p[1] * x).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Per-parameter (lo, hi); `None` leaves every parameter free of bounds.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Parameters held at their initial value.
    pub fixed: Vec<bool>,
    /// Per-point standard deviations; residuals are divided by these.
    pub sigma: Option<Vec<f64>>,
    pub max_iterations: usize,
    /// Convergence once every free parameter moves by less than this, relative.
    pub step_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bounds: None,
            fixed: Vec::new(),
            sigma: None,
            max_iterations: 200,
            step_tolerance: 1e-8,
        }
    }
}

impl FitOptions {
    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn with_fixed(mut self, fixed: Vec<bool>) -> Self {
        self.fixed = fixed;
        self
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Self {
        self.sigma = Some(sigma);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: Model,
    pub params: Vec<f64>,
    /// Zero rows and columns for fixed parameters.
    pub covariance: DMatrix<f64>,
    /// √Σ r², weighted by `sigma` if given.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.model.index_of(name).map(|i| self.params[i])
    }

    pub fn stderr(&self, name: &str) -> Option<f64> {
        self.model.index_of(name).map(|i| self.covariance[(i, i)].max(0.0).sqrt())
    }
}

struct Problem<'a> {
    model: Model,
    x: &'a [f64],
    y: &'a [f64],
    sigma: Option<&'a [f64]>,
    bounds: Vec<(f64, f64)>,
    free: Vec<usize>,
    typical: Vec<f64>,
}

impl Problem<'_> {
    fn residuals(&self, p: &[f64]) -> Option<DVector<f64>> {
        let f = self.model.eval_many(self.x, p);
        let r = DVector::from_iterator(
            f.len(),
            f.iter().zip(self.y).enumerate().map(|(i, (fi, yi))| {
                let s = self.sigma.map_or(1.0, |s| s[i]);
                (fi - yi) / s
            }),
        );
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn clamp(&self, p: &mut [f64]) {
        for (v, &(lo, hi)) in p.iter_mut().zip(&self.bounds) {
            *v = v.clamp(lo, hi);
        }
    }

    /// Central differences, one-sided against a bound.
    fn jacobian(&self, p: &[f64], r0: &DVector<f64>) -> Option<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(r0.len(), self.free.len());
        for (col, &k) in self.free.iter().enumerate() {
            let h = 1e-6 * p[k].abs().max(self.typical[k]);
            let (lo, hi) = self.bounds[k];
            let mut up = p.to_vec();
            let mut dn = p.to_vec();
            up[k] = (p[k] + h).min(hi);
            dn[k] = (p[k] - h).max(lo);
            let span = up[k] - dn[k];
            if span <= 0.0 {
                return None;
            }
            let ru = if up[k] == p[k] { r0.clone() } else { self.residuals(&up)? };
            let rd = if dn[k] == p[k] { r0.clone() } else { self.residuals(&dn)? };
            jac.set_column(col, &((ru - rd) / span));
        }
        Some(jac)
    }
}

/// Least-squares fit of `model` to (x, y) from `init`.
///
/// Returns an error rather than a partial result when the iteration cap is reached.
pub fn fit_least_squares(model: Model, x: &[f64], y: &[f64], init: &[f64], opts: &FitOptions) -> Result<FitResult> {
    let np = model.n_params();
    let names = model.param_names();
    if init.len() != np {
        return Err(Error::LengthMismatch {
            what: "init",
            got: init.len(),
            expected: np,
        });
    }
    if y.len() != x.len() {
        return Err(Error::LengthMismatch {
            what: "y",
            got: y.len(),
            expected: x.len(),
        });
    }
    if let Some(s) = &opts.sigma {
        if s.len() != x.len() {
            return Err(Error::LengthMismatch {
                what: "sigma",
                got: s.len(),
                expected: x.len(),
            });
        }
        if s.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::invalid("sigma", "must be positive"));
        }
    }
    let bounds = opts
        .bounds
        .clone()
        .unwrap_or_else(|| vec![(f64::NEG_INFINITY, f64::INFINITY); np]);
    if bounds.len() != np {
        return Err(Error::LengthMismatch {
            what: "bounds",
            got: bounds.len(),
            expected: np,
        });
    }
    for (i, (&v, &(lo, hi))) in init.iter().zip(&bounds).enumerate() {
        if !(v >= lo && v <= hi) {
            return Err(Error::InitOutOfBounds {
                name: names[i],
                value: v,
                lo,
                hi,
            });
        }
    }
    let fixed = if opts.fixed.is_empty() {
        vec![false; np]
    } else if opts.fixed.len() == np {
        opts.fixed.clone()
    } else {
        return Err(Error::LengthMismatch {
            what: "fixed",
            got: opts.fixed.len(),
            expected: np,
        });
    };
    let free: Vec<usize> = (0..np).filter(|&i| !fixed[i]).collect();
    if x.len() < free.len() {
        return Err(Error::TooFewPoints {
            needed: free.len(),
            got: x.len(),
        });
    }
    let typical = init.iter().map(|v| if *v != 0.0 { v.abs() } else { 1.0 }).collect();
    let prob = Problem {
        model,
        x,
        y,
        sigma: opts.sigma.as_deref(),
        bounds,
        free,
        typical,
    };

    let mut p = init.to_vec();
    let mut r = prob
        .residuals(&p)
        .ok_or_else(|| Error::Degenerate(format!("{} is not finite at the initial point", model.name())))?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = cost == 0.0 || prob.free.is_empty();
    let mut iterations = 0;
    let mut jac = DMatrix::zeros(r.len(), prob.free.len());

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        jac = prob
            .jacobian(&p, &r)
            .ok_or_else(|| Error::Degenerate("model is not finite near the current point".into()))?;
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        loop {
            let mut damped = a.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda * a[(i, i)].max(1e-300);
            }
            let step = damped.cholesky().map(|c| c.solve(&(-&g)));
            let Some(step) = step else {
                lambda *= 10.0;
                if lambda > 1e20 {
                    return Err(Error::Degenerate("normal equations are singular".into()));
                }
                continue;
            };
            let mut trial = p.clone();
            for (j, &k) in prob.free.iter().enumerate() {
                trial[k] += step[j];
            }
            prob.clamp(&mut trial);
            let rel = prob
                .free
                .iter()
                .map(|&k| (trial[k] - p[k]).abs() / p[k].abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            let trial_r = prob.residuals(&trial);
            match trial_r {
                Some(tr) if tr.norm_squared() < cost => {
                    p = trial;
                    cost = tr.norm_squared();
                    r = tr;
                    lambda = (lambda / 10.0).max(1e-12);
                    converged = rel < opts.step_tolerance || cost == 0.0;
                    break;
                }
                _ => {
                    if rel < opts.step_tolerance {
                        converged = true;
                        break;
                    }
                    lambda *= 10.0;
                    // No downhill direction left at working precision.
                    if lambda > 1e20 {
                        converged = true;
                        break;
                    }
                }
            }
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            iterations,
            residual: cost.sqrt(),
        });
    }

    let mut covariance = DMatrix::zeros(np, np);
    if !prob.free.is_empty() {
        if let Some(j) = prob.jacobian(&p, &r) {
            jac = j;
        }
        let dof = (x.len() - prob.free.len()).max(1) as f64;
        let s2 = if opts.sigma.is_some() { 1.0 } else { cost / dof };
        if let Some(inv) = (jac.transpose() * &jac).try_inverse() {
            for (a, &ka) in prob.free.iter().enumerate() {
                for (b, &kb) in prob.free.iter().enumerate() {
                    covariance[(ka, kb)] = s2 * inv[(a, b)];
                }
            }
        }
    }
    Ok(FitResult {
        model,
        params: p,
        covariance,
        residual_norm: cost.sqrt(),
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn registry_is_complete_and_named_uniquely() {
        let mut names: Vec<&str> = Model::ALL.iter().map(|m| m.name()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 9);
    }

    #[test]
    fn linear_fit_is_exact() {
        let x: Vec<f64> = (0..6).map(|k| 0.01 * k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.7 - 0.3 * v).collect();
        let f = fit_least_squares(Model::LinearEta, &x, &y, &[0.5, 0.0], &FitOptions::default()).unwrap();
        assert_relative_eq!(f.params[0], 0.7, max_relative = 1e-10);
        assert_relative_eq!(f.params[1], -0.3, max_relative = 1e-8);
    }

    #[test]
    fn init_outside_bounds_is_rejected() {
        let opts = FitOptions::default().with_bounds(vec![(0.0, 1.0)]);
        let err = fit_least_squares(Model::AllanPowerlaw, &[1.0, 2.0], &[1.0, 0.7], &[2.0], &opts);
        assert!(matches!(err, Err(Error::InitOutOfBounds { name: "s", .. })));
    }

    #[test]
    fn fixed_parameters_do_not_move() {
        let x: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * (-v / 0.7).exp() + 0.1).collect();
        let opts = FitOptions::default().with_fixed(vec![false, false, true]);
        let f = fit_least_squares(Model::ExpDecay, &x, &y, &[1.0, 1.0, 0.3], &opts).unwrap();
        assert_eq!(f.params[2], 0.3);
        assert_eq!(f.covariance[(2, 2)], 0.0);
    }

    #[test]
    fn too_few_points() {
        let e = fit_least_squares(Model::Lorentzian, &[0.0, 1.0], &[1.0, 0.5], &[0.0, 1.0, 1.0, 0.0], &FitOptions::default());
        assert!(matches!(e, Err(Error::TooFewPoints { needed: 4, got: 2 })));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let x: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| (3.0 * v).cos() * (-v / 2.0).exp()).collect();
        let opts = FitOptions {
            max_iterations: 1,
            ..FitOptions::default()
        };
        let e = fit_least_squares(Model::Ramsey, &x, &y, &[2.0, 1.0, 0.5, 0.1], &opts);
        assert!(matches!(e, Err(Error::NotConverged { iterations: 1, .. })));
    }
}
