//! Fixed-step fourth-order Runge–Kutta integration of the master equation.

use crate::error::{Error, Result};
use crate::model::{Generator, LindbladModel};
use crate::schedule::PulseSchedule;
use crate::sparse::{unvectorize, vec_trace, vectorize};
use magnon_core::units::{NS, US};
use magnon_core::DensityMatrix;
use num_complex::Complex64;

pub const DEFAULT_DT: f64 = 0.1 * NS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub dt: f64,
    /// Steps between step-doubling and trace checks.
    pub check_every: usize,
    /// Largest tolerated ‖full step − two half steps‖ relative to ‖ρ‖.
    pub step_tolerance: f64,
    /// Trace drift allowed per microsecond of evolution.
    pub trace_tolerance: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            check_every: 1000,
            step_tolerance: 1e-6,
            trace_tolerance: 1e-9,
        }
    }
}

/// Qubit populations and mean magnon number at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationRecord {
    pub t: f64,
    pub p_g: f64,
    pub p_e: f64,
    pub p_f: f64,
    pub n_m: f64,
}

/// Observables read off the diagonal of a vectorised state.
pub fn populations(state: &[Complex64], dim: usize, nm: usize, t: f64) -> PopulationRecord {
    let mut p = [0.0; 3];
    let mut n = 0.0;
    for i in 0..dim {
        let w = state[i * dim + i].re;
        p[i / nm] += w;
        n += (i % nm) as f64 * w;
    }
    PopulationRecord {
        t,
        p_g: p[0],
        p_e: p[1],
        p_f: p[2],
        n_m: n,
    }
}

/// RK4 stepper for one generator and schedule.
pub struct Integrator<'a> {
    gen: &'a Generator,
    schedule: &'a PulseSchedule,
    opts: EvolveOptions,
    /// The generator already holds the whole magnon drive.
    magnon_folded: bool,
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

impl<'a> Integrator<'a> {
    pub fn new(gen: &'a Generator, schedule: &'a PulseSchedule, opts: EvolveOptions) -> Result<Self> {
        if !(opts.dt > 0.0) || !opts.dt.is_finite() {
            return Err(Error::invalid("dt", "must be positive"));
        }
        let n = gen.dim * gen.dim;
        Ok(Self {
            gen,
            schedule,
            opts,
            magnon_folded: schedule.constant_magnon() == Some(gen.base_omega_d),
            k: std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]),
            tmp: vec![Complex64::new(0.0, 0.0); n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.opts.dt
    }

    fn rhs(gen: &Generator, schedule: &PulseSchedule, folded: bool, t: f64, x: &[Complex64], out: &mut [Complex64]) {
        gen.base.apply(x, out);
        let s = schedule.qubit_envelope(t);
        if s != 0.0 {
            gen.qubit.apply_add(x, s, out);
        }
        if folded {
            return;
        }
        let d = schedule.magnon_amplitude(t) - gen.base_omega_d;
        if d != 0.0 {
            gen.magnon.apply_add(x, d, out);
        }
    }

    /// One RK4 step of size `h` from `t`.
    pub fn step(&mut self, t: f64, h: f64, x: &mut [Complex64]) {
        let (gen, sched, folded) = (self.gen, self.schedule, self.magnon_folded);
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        Self::rhs(gen, sched, folded, t, x, k1);
        for i in 0..x.len() {
            tmp[i] = x[i] + k1[i] * (0.5 * h);
        }
        Self::rhs(gen, sched, folded, t + 0.5 * h, tmp, k2);
        for i in 0..x.len() {
            tmp[i] = x[i] + k2[i] * (0.5 * h);
        }
        Self::rhs(gen, sched, folded, t + 0.5 * h, tmp, k3);
        for i in 0..x.len() {
            tmp[i] = x[i] + k3[i] * h;
        }
        Self::rhs(gen, sched, folded, t + h, tmp, k4);
        for i in 0..x.len() {
            x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }

    fn check(&mut self, t: f64, x: &[Complex64], elapsed: f64) -> Result<()> {
        let h = self.opts.dt;
        let mut full = x.to_vec();
        self.step(t, h, &mut full);
        let mut half = x.to_vec();
        self.step(t, 0.5 * h, &mut half);
        self.step(t + 0.5 * h, 0.5 * h, &mut half);
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        let diff = full.iter().zip(&half).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let mismatch = diff / norm;
        if !(mismatch <= self.opts.step_tolerance) {
            return Err(Error::StepInstability { t, mismatch });
        }
        self.check_trace(t, x, elapsed)
    }

    fn check_trace(&self, t: f64, x: &[Complex64], elapsed: f64) -> Result<()> {
        let tr = vec_trace(x, self.gen.dim);
        let drift = (tr - Complex64::new(1.0, 0.0)).norm();
        let allowed = self.opts.trace_tolerance * (1.0 + elapsed.abs() / US);
        if !(drift <= allowed) {
            return Err(Error::TraceDrift { t, drift });
        }
        Ok(())
    }

    /// Advances `n` steps from `t_start`, calling `observer` with
    /// `k0 + steps taken` and the state after every step.
    pub fn run<F>(&mut self, x: &mut [Complex64], t_start: f64, k0: i64, n: usize, mut observer: F) -> Result<()>
    where
        F: FnMut(i64, &[Complex64]),
    {
        let dt = self.opts.dt;
        for s in 0..n {
            let k = k0 + s as i64;
            let t = t_start + s as f64 * dt;
            if self.opts.check_every > 0 && s > 0 && s % self.opts.check_every == 0 {
                self.check(t, x, s as f64 * dt)?;
            }
            self.step(t, dt, x);
            observer(k + 1, x);
        }
        if n > 0 {
            self.check_trace(t_start + n as f64 * dt, x, n as f64 * dt)?;
        }
        Ok(())
    }
}

/// Integer step count from `origin` to `t`, which must sit on the lattice.
pub fn lattice_index(t: f64, origin: f64, dt: f64) -> Result<i64> {
    let x = (t - origin) / dt;
    let k = x.round();
    if !x.is_finite() || (x - k).abs() > 1e-6 {
        return Err(Error::OffLattice { t, dt });
    }
    Ok(k as i64)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<PopulationRecord>,
    /// State at each grid point.
    pub states: Vec<DensityMatrix>,
}

/// Evolves `rho0` from the schedule start and reports at each time in `t_grid`.
///
/// Grid points off the step lattice are reached with one shortened final step.
pub fn evolve(
    rho0: &DensityMatrix,
    model: &LindbladModel,
    schedule: &PulseSchedule,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    rho0.check()?;
    let d = model.dim();
    if rho0.dim() != d {
        return Err(Error::invalid("rho0", format!("dimension {} does not match model {d}", rho0.dim())));
    }
    if t_grid.windows(2).any(|w| !(w[1] >= w[0])) || t_grid.first().is_some_and(|&t| t < schedule.sim_start()) {
        return Err(Error::NonMonotoneGrid);
    }
    let omega_d = schedule.constant_magnon().unwrap_or(0.0);
    let gen = model.generator(omega_d);
    let mut integ = Integrator::new(&gen, schedule, *opts)?;
    let nm = model.hilbert().n_m_levels;
    let dt = opts.dt;
    let t0 = schedule.sim_start();

    let mut x = vectorize(rho0.matrix());
    let mut t = t0;
    let mut records = Vec::with_capacity(t_grid.len());
    let mut states = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        let span = target - t;
        let whole = ((span / dt) * (1.0 + 1e-12)).floor().max(0.0) as usize;
        integ.run(&mut x, t, 0, whole, |_, _| {})?;
        t += whole as f64 * dt;
        let rest = target - t;
        if rest > 1e-9 * dt {
            integ.step(t, rest, &mut x);
        }
        t = target;
        records.push(populations(&x, d, nm, t));
        let rho = unvectorize(&x, d);
        let rho = DensityMatrix::new(rho.clone()).unwrap_or_else(|_| DensityMatrix::from_matrix_unchecked(rho));
        states.push(rho);
    }
    Ok(Trajectory { records, states })
}
