//! Fixed-step classical Runge–Kutta integration of `u̇ = A u + g(t)·1` and
//! the exact discrete adjoint of the stepped scheme.

use crate::error::{Error, Result};
use crate::forward::operator::HeatOperator;
use crate::forward::source::HeatSource;
use crate::forward::trajectory::{validate_time_grid, Trajectory};

/// Step-size rule: every interval between requested output times is split
/// into equal sub-steps no longer than `safety · Δx² / (4 · max a)`.
/// `safety = 1` is the explicit stability limit; the default 0.1 keeps the
/// stiffest modes accurate to about 1e-7 relative.
pub const DEFAULT_SAFETY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub safety: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { safety: DEFAULT_SAFETY }
    }
}

impl StepControl {
    pub fn max_step(&self, op: &HeatOperator) -> f64 {
        self.safety * op.stable_step()
    }

    fn substeps(&self, op: &HeatOperator, span: f64) -> usize {
        ((span / self.max_step(op)) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

struct Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    y: Vec<f64>,
}

impl Work {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            y: vec![0.0; n],
        }
    }
}

fn axpy_into(out: &mut [f64], u: &[f64], h: f64, k: &[f64]) {
    for ((o, &a), &b) in out.iter_mut().zip(u).zip(k) {
        *o = a + h * b;
    }
}

fn rhs(op: &HeatOperator, src: &HeatSource, t: f64, y: &[f64], out: &mut [f64]) {
    op.apply(y, out);
    if !src.is_zero() {
        let g = src.value(t);
        out.iter_mut().for_each(|v| *v += g);
    }
}

fn step(op: &HeatOperator, src: &HeatSource, t: f64, h: f64, u: &mut [f64], w: &mut Work) {
    rhs(op, src, t, u, &mut w.k1);
    axpy_into(&mut w.y, u, 0.5 * h, &w.k1);
    rhs(op, src, t + 0.5 * h, &w.y, &mut w.k2);
    axpy_into(&mut w.y, u, 0.5 * h, &w.k2);
    rhs(op, src, t + 0.5 * h, &w.y, &mut w.k3);
    axpy_into(&mut w.y, u, h, &w.k3);
    rhs(op, src, t + h, &w.y, &mut w.k4);
    let c = h / 6.0;
    for (i, v) in u.iter_mut().enumerate() {
        *v += c * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
    }
}

fn check_inputs(op: &HeatOperator, u0: &[f64], times: &[f64]) -> Result<()> {
    if u0.len() != op.len() {
        return Err(Error::DimensionMismatch {
            expected: op.len(),
            found: u0.len(),
        });
    }
    validate_time_grid(times)
}

/// Drives the stepper over `times`, calling `on_step(t_end, state)` after
/// every sub-step and `on_output(k, state)` at every requested time.
fn drive(
    op: &HeatOperator,
    u0: &[f64],
    src: &HeatSource,
    times: &[f64],
    ctrl: StepControl,
    mut on_step: impl FnMut(f64, f64, &[f64]),
    mut on_output: impl FnMut(usize, &[f64]),
) -> Result<()> {
    check_inputs(op, u0, times)?;
    let mut u = u0.to_vec();
    let mut work = Work::new(u.len());
    on_output(0, &u);
    for (k, w) in times.windows(2).enumerate() {
        let n = ctrl.substeps(op, w[1] - w[0]);
        let h = (w[1] - w[0]) / n as f64;
        for s in 0..n {
            let t = w[0] + s as f64 * h;
            step(op, src, t, h, &mut u, &mut work);
            on_step(t, h, &u);
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        on_output(k + 1, &u);
    }
    Ok(())
}

/// Integrates `u̇ = A u + f` from `u0` and reports the state at every time of
/// `times` (which must start at 0 and increase strictly).
pub fn integrate(op: &HeatOperator, u0: &[f64], src: &HeatSource, times: &[f64]) -> Result<Trajectory> {
    integrate_with(op, u0, src, times, StepControl::default())
}

pub fn integrate_with(
    op: &HeatOperator,
    u0: &[f64],
    src: &HeatSource,
    times: &[f64],
    ctrl: StepControl,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(times.len());
    drive(op, u0, src, times, ctrl, |_, _, _| {}, |_, u| states.push(u.to_vec()))?;
    Ok(Trajectory {
        times: times.to_vec(),
        states,
    })
}

/// Every sub-step state of a forward run, kept for the adjoint sweep.
#[derive(Debug, Clone)]
pub struct Rk4Tape {
    /// `(t, h)` of each sub-step.
    pub steps: Vec<(f64, f64)>,
    /// `states[n]` is the state before sub-step `n`; one extra final entry.
    pub states: Vec<Vec<f64>>,
    /// Index into `states` of each requested output time.
    pub output_index: Vec<usize>,
}

impl Rk4Tape {
    pub fn output(&self, k: usize) -> &[f64] {
        &self.states[self.output_index[k]]
    }
}

pub fn integrate_tape(
    op: &HeatOperator,
    u0: &[f64],
    src: &HeatSource,
    times: &[f64],
    ctrl: StepControl,
) -> Result<Rk4Tape> {
    let mut steps = Vec::new();
    let mut states = vec![u0.to_vec()];
    let mut output_index = Vec::with_capacity(times.len());
    let taken = std::cell::Cell::new(0usize);
    drive(
        op,
        u0,
        src,
        times,
        ctrl,
        |t, h, u| {
            steps.push((t, h));
            states.push(u.to_vec());
            taken.set(taken.get() + 1);
        },
        |_, _| output_index.push(taken.get()),
    )?;
    Ok(Rk4Tape {
        steps,
        states,
        output_index,
    })
}

/// Reverse sweep through a tape.
///
/// `seeds[k]` is `∂L/∂u` at output time `k` (or `None`). Returns `∂L/∂a`
/// (per conductivity entry) of the *discrete* map `a ↦ outputs`, so it
/// agrees with finite differences of [`integrate_tape`] to rounding.
pub fn adjoint_conductivity_gradient(
    op: &HeatOperator,
    src: &HeatSource,
    tape: &Rk4Tape,
    seeds: &[Option<Vec<f64>>],
) -> Vec<f64> {
    let n = op.len();
    let mut grad = vec![0.0; op.conductivity().len()];
    let mut lam = vec![0.0; n];
    let mut w = Work::new(n);
    let mut dk = vec![0.0; n];
    let mut dy = vec![0.0; n];
    let mut lam_next = vec![0.0; n];
    let (mut y2, mut y3, mut y4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);

    // map state index -> seed
    let mut seed_at = vec![None; tape.states.len()];
    for (k, s) in seeds.iter().enumerate() {
        if let Some(s) = s {
            seed_at[tape.output_index[k]] = Some(s);
        }
    }
    for si in (0..tape.states.len()).rev() {
        if let Some(s) = seed_at[si] {
            lam.iter_mut().zip(s.iter()).for_each(|(l, v)| *l += v);
        }
        if si == 0 {
            break;
        }
        let (t, h) = tape.steps[si - 1];
        let u = &tape.states[si - 1];

        // recompute stage inputs y1..y4 (y1 = u)
        rhs(op, src, t, u, &mut w.k1);
        axpy_into(&mut y2, u, 0.5 * h, &w.k1);
        rhs(op, src, t + 0.5 * h, &y2, &mut w.k2);
        axpy_into(&mut y3, u, 0.5 * h, &w.k2);
        rhs(op, src, t + 0.5 * h, &y3, &mut w.k3);
        axpy_into(&mut y4, u, h, &w.k3);

        lam_next.copy_from_slice(&lam);
        // stage 4
        dk.iter_mut().zip(&lam_next).for_each(|(d, l)| *d = h / 6.0 * l);
        op.apply(&dk, &mut dy);
        op.accumulate_conductivity_gradient(&dk, &y4, &mut grad);
        lam.iter_mut().zip(&dy).for_each(|(l, d)| *l += d);
        // stage 3
        for i in 0..n {
            dk[i] = h / 3.0 * lam_next[i] + h * dy[i];
        }
        op.apply(&dk, &mut dy);
        op.accumulate_conductivity_gradient(&dk, &y3, &mut grad);
        lam.iter_mut().zip(&dy).for_each(|(l, d)| *l += d);
        // stage 2
        for i in 0..n {
            dk[i] = h / 3.0 * lam_next[i] + 0.5 * h * dy[i];
        }
        op.apply(&dk, &mut dy);
        op.accumulate_conductivity_gradient(&dk, &y2, &mut grad);
        lam.iter_mut().zip(&dy).for_each(|(l, d)| *l += d);
        // stage 1
        for i in 0..n {
            dk[i] = h / 6.0 * lam_next[i] + 0.5 * h * dy[i];
        }
        op.apply(&dk, &mut dy);
        op.accumulate_conductivity_gradient(&dk, u, &mut grad);
        lam.iter_mut().zip(&dy).for_each(|(l, d)| *l += d);
    }
    grad
}
