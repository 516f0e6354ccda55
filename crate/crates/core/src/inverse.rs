//! Measurement-misfit loss, adjoint gradients, and the two descent drivers:
//! adaptive Fourier-space descent in 1D and plain pixel descent in 2D.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::field::{eval_fourier_log, fourier_basis};
use crate::forward::{
    adjoint_conductivity_gradient, integrate_tape, HeatOperator, HeatSource, StepControl, TIME_MATCH_TOL,
};
use crate::grid::Grid;
use crate::sensing::MeasurementSet;

/// How `θ` maps to nodal conductivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    /// `ln a` as a truncated Fourier series (1D, any `dim θ ≥ 1`).
    FourierLog,
    /// `ln a` per node (2D, `dim θ = J²`).
    PixelLog,
}

impl Parameterization {
    pub fn for_grid(grid: &Grid) -> Self {
        match grid {
            Grid::D1(_) => Parameterization::FourierLog,
            Grid::D2(_) => Parameterization::PixelLog,
        }
    }
}

/// Everything but the conductivity: grid, initial state, source and stepping.
#[derive(Debug, Clone)]
pub struct InverseProblem {
    pub grid: Grid,
    pub u0: Vec<f64>,
    pub source: HeatSource,
    pub step: StepControl,
    pub parameterization: Parameterization,
}

impl InverseProblem {
    pub fn new(grid: Grid, u0: Vec<f64>, source: HeatSource) -> Result<Self> {
        if u0.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: u0.len(),
            });
        }
        let parameterization = Parameterization::for_grid(&grid);
        Ok(Self {
            grid,
            u0,
            source,
            step: StepControl::default(),
            parameterization,
        })
    }

    pub fn with_step(mut self, step: StepControl) -> Self {
        self.step = step;
        self
    }

    /// Nodal conductivity `a(·; θ)`.
    pub fn conductivity(&self, theta: &[f64]) -> Result<Vec<f64>> {
        match (self.parameterization, &self.grid) {
            (Parameterization::FourierLog, Grid::D1(g)) => eval_fourier_log(theta, g),
            (Parameterization::PixelLog, grid) => {
                if theta.len() != grid.len() {
                    return Err(Error::DimensionMismatch {
                        expected: grid.len(),
                        found: theta.len(),
                    });
                }
                Ok(theta.iter().map(|t| t.exp()).collect())
            }
            (Parameterization::FourierLog, Grid::D2(_)) => {
                Err(Error::Config("Fourier parameterization is only defined in 1D".into()))
            }
        }
    }

    /// Pulls `∂L/∂a` back to `∂L/∂θ` given `a = a(·; θ)`.
    fn chain_rule(&self, theta: &[f64], a: &[f64], grad_a: &[f64]) -> Vec<f64> {
        match (self.parameterization, &self.grid) {
            (Parameterization::FourierLog, Grid::D1(g)) => {
                let xs = g.coords();
                (0..theta.len())
                    .map(|k| {
                        xs.iter()
                            .zip(a)
                            .zip(grad_a)
                            .map(|((&x, &aj), &gj)| aj * gj * fourier_basis(k, x))
                            .sum()
                    })
                    .collect()
            }
            _ => a.iter().zip(grad_a).map(|(a, g)| a * g).collect(),
        }
    }

    fn operator(&self, a: &[f64]) -> Result<HeatOperator> {
        HeatOperator::new(self.grid, a)
    }
}

/// A problem bound to a measurement set: the forward time grid and the
/// `(time slot, node)` of every record are resolved once.
#[derive(Debug, Clone)]
pub struct Objective {
    problem: InverseProblem,
    times: Vec<f64>,
    /// `(index into times, 0-based node, observed value)`
    records: Vec<(usize, usize, f64)>,
}

impl Objective {
    pub fn new(problem: InverseProblem, observed: &MeasurementSet) -> Result<Self> {
        if observed.is_empty() {
            return Err(Error::Config("measurement set is empty".into()));
        }
        let n = problem.grid.len();
        let mut times = vec![0.0];
        times.extend(observed.times());
        if times.len() > 1 && times[1] <= TIME_MATCH_TOL {
            return Err(Error::NonMonotoneTimes);
        }
        let mut records = Vec::with_capacity(observed.len());
        for r in &observed.records {
            let slot = times
                .iter()
                .position(|&t| (t - r.t).abs() <= TIME_MATCH_TOL)
                .ok_or(Error::MissingMeasurementTime(r.t))?;
            if r.node == 0 || r.node > n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.node,
                });
            }
            records.push((slot, r.node - 1, r.temperature));
        }
        Ok(Self {
            problem,
            times,
            records,
        })
    }

    pub fn problem(&self) -> &InverseProblem {
        &self.problem
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn record_count(&self) -> usize {
        self.records.len()
    }

    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        let a = self.problem.conductivity(theta)?;
        let op = self.problem.operator(&a)?;
        let tape = integrate_tape(
            &op,
            &self.problem.u0,
            &self.problem.source,
            &self.times,
            self.problem.step,
        )?;
        Ok(self.misfit(&tape, None))
    }

    fn misfit(&self, tape: &crate::forward::Rk4Tape, mut seeds: Option<&mut [Option<Vec<f64>>]>) -> f64 {
        let scale = 1.0 / self.records.len() as f64;
        let n = self.problem.grid.len();
        let mut sum = 0.0;
        for &(slot, node, obs) in &self.records {
            let r = tape.output(slot)[node] - obs;
            sum += r * r;
            if let Some(seeds) = seeds.as_deref_mut() {
                seeds[slot].get_or_insert_with(|| vec![0.0; n])[node] += 2.0 * scale * r;
            }
        }
        sum * scale
    }

    /// Loss and its adjoint gradient from one forward and one reverse sweep.
    pub fn loss_and_grad(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let a = self.problem.conductivity(theta)?;
        let op = self.problem.operator(&a)?;
        let tape = integrate_tape(
            &op,
            &self.problem.u0,
            &self.problem.source,
            &self.times,
            self.problem.step,
        )?;
        let mut seeds = vec![None; self.times.len()];
        let loss = self.misfit(&tape, Some(&mut seeds));
        let grad_a = adjoint_conductivity_gradient(&op, &self.problem.source, &tape, &seeds);
        Ok((loss, self.problem.chain_rule(theta, &a, &grad_a)))
    }

    pub fn grad_adjoint(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.loss_and_grad(theta).map(|(_, g)| g)
    }

    /// Central differences, one column per parameter (columns run in parallel).
    pub fn grad_fd(&self, theta: &[f64], h: f64) -> Result<Vec<f64>> {
        exec::map_range(theta.len(), |k| {
            let mut p = theta.to_vec();
            p[k] = theta[k] + h;
            let up = self.loss(&p)?;
            p[k] = theta[k] - h;
            let down = self.loss(&p)?;
            Ok((up - down) / (2.0 * h))
        })
        .into_iter()
        .collect()
    }

    /// Simulated readings at the observed `(t, node)` pairs, in record order.
    pub fn simulate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let a = self.problem.conductivity(theta)?;
        let op = self.problem.operator(&a)?;
        let tape = integrate_tape(
            &op,
            &self.problem.u0,
            &self.problem.source,
            &self.times,
            self.problem.step,
        )?;
        Ok(self.records.iter().map(|&(s, n, _)| tape.output(s)[n]).collect())
    }

    /// `max |simulated − observed|` over all records.
    pub fn residual_max(&self, theta: &[f64]) -> Result<f64> {
        let sim = self.simulate(theta)?;
        Ok(sim
            .iter()
            .zip(&self.records)
            .map(|(s, r)| (s - r.2).abs())
            .fold(0.0, f64::max))
    }
}

/// Mean squared misfit between simulated and observed readings.
pub fn loss(theta: &[f64], observed: &MeasurementSet, problem: &InverseProblem) -> Result<f64> {
    Objective::new(problem.clone(), observed)?.loss(theta)
}

pub fn grad_adjoint(theta: &[f64], observed: &MeasurementSet, problem: &InverseProblem) -> Result<Vec<f64>> {
    Objective::new(problem.clone(), observed)?.grad_adjoint(theta)
}

/// `‖a_rec − a_truth‖₂ / ‖a_truth‖₂` (Frobenius on flattened 2D fields).
pub fn relative_error(a_rec: &[f64], a_truth: &[f64]) -> Result<f64> {
    if a_rec.len() != a_truth.len() {
        return Err(Error::DimensionMismatch {
            expected: a_truth.len(),
            found: a_rec.len(),
        });
    }
    let norm = a_truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroNormTruth);
    }
    let diff = a_rec
        .iter()
        .zip(a_truth)
        .map(|(r, t)| (r - t) * (r - t))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}

/// Descent hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GDConfig {
    pub gamma: f64,
    /// Squared gradient norm below which a new Fourier mode is appended (1D).
    pub epsilon: f64,
    pub max_epoch: usize,
    /// Highest frequency; `dim θ ≤ 2N + 1`.
    pub n_max: usize,
    pub initial_log_conductivity: f64,
}

pub const DEFAULT_GAMMA_1D: f64 = 10.0;
pub const DEFAULT_GAMMA_2D: f64 = 5e3;
pub const DEFAULT_EPSILON: f64 = 1e-8;

impl GDConfig {
    pub fn default_1d() -> Self {
        Self {
            gamma: DEFAULT_GAMMA_1D,
            epsilon: DEFAULT_EPSILON,
            max_epoch: 500,
            n_max: 9,
            initial_log_conductivity: 0.01f64.ln(),
        }
    }

    pub fn default_2d() -> Self {
        Self {
            gamma: DEFAULT_GAMMA_2D,
            ..Self::default_1d()
        }
    }

    pub fn for_dim(dim: usize) -> Self {
        if dim == 1 {
            Self::default_1d()
        } else {
            Self::default_2d()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if self.max_epoch == 0 {
            return Err(Error::Config("max_epoch must be at least 1".into()));
        }
        if !self.initial_log_conductivity.is_finite() {
            return Err(Error::Config("initial_log_conductivity must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub dim_theta: usize,
    pub loss: f64,
    pub relative_error: f64,
    pub grad_norm2: f64,
}

/// Final iterate plus the per-epoch record. `initial` describes the starting
/// guess; `history[n-1]` the iterate after epoch `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub theta: Vec<f64>,
    pub grad: Vec<f64>,
    pub epoch: usize,
    pub initial: HistoryRow,
    pub history: Vec<HistoryRow>,
}

impl OptimizerState {
    pub fn final_row(&self) -> &HistoryRow {
        self.history.last().unwrap_or(&self.initial)
    }

    /// Initial row followed by every epoch.
    pub fn rows(&self) -> impl Iterator<Item = &HistoryRow> {
        std::iter::once(&self.initial).chain(self.history.iter())
    }

    pub fn write_log_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,dim_theta,loss,relative_error,grad_norm2")?;
        for r in self.rows() {
            writeln!(
                w,
                "{},{},{:e},{:e},{:e}",
                r.epoch, r.dim_theta, r.loss, r.relative_error, r.grad_norm2
            )?;
        }
        Ok(())
    }
}

/// Writes `node,value` (1D) or `i,j,value` (2D) rows, 1-based.
pub fn write_reconstruction_csv<W: Write>(grid: &Grid, a: &[f64], mut w: W) -> std::io::Result<()> {
    match grid {
        Grid::D1(_) => {
            writeln!(w, "node,conductivity")?;
            for (j, v) in a.iter().enumerate() {
                writeln!(w, "{},{}", j + 1, v)?;
            }
        }
        Grid::D2(g) => {
            writeln!(w, "i,j,conductivity")?;
            for (k, v) in a.iter().enumerate() {
                let (i, j) = g.unflat(k + 1);
                writeln!(w, "{i},{j},{v}")?;
            }
        }
    }
    Ok(())
}

fn norm2(g: &[f64]) -> f64 {
    g.iter().map(|v| v * v).sum()
}

fn evaluate(obj: &Objective, theta: &[f64], truth: Option<&[f64]>, epoch: usize) -> Result<(HistoryRow, Vec<f64>)> {
    let (loss, grad) = obj.loss_and_grad(theta)?;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite);
    }
    let relative_error = match truth {
        Some(t) => relative_error(&obj.problem.conductivity(theta)?, t)?,
        None => f64::NAN,
    };
    let row = HistoryRow {
        epoch,
        dim_theta: theta.len(),
        loss,
        relative_error,
        grad_norm2: norm2(&grad),
    };
    Ok((row, grad))
}

fn descend(
    obj: &Objective,
    config: &GDConfig,
    theta0: Vec<f64>,
    truth: Option<&[f64]>,
    expand: bool,
) -> Result<OptimizerState> {
    config.validate()?;
    let cap = 2 * config.n_max + 1;
    let mut theta = theta0;
    let (initial, mut grad) = evaluate(obj, &theta, truth, 0)?;
    let mut history = Vec::with_capacity(config.max_epoch);
    for epoch in 1..=config.max_epoch {
        if expand && norm2(&grad) < config.epsilon && theta.len() < cap {
            theta.push(0.0);
        } else {
            theta.iter_mut().zip(&grad).for_each(|(t, g)| *t -= config.gamma * g);
        }
        let (row, g) = evaluate(obj, &theta, truth, epoch)?;
        grad = g;
        history.push(row);
    }
    Ok(OptimizerState {
        theta,
        grad,
        epoch: config.max_epoch,
        initial,
        history,
    })
}

/// Adaptive Fourier-space descent: each epoch either appends a zero
/// coefficient (gradient stalled and `dim θ ≤ 2N`) or takes a step `θ -= γ g`.
/// Starts from the constant `θ = (initial_log_conductivity,)`.
pub fn adaptive_fs_gd(config: &GDConfig, obj: &Objective, truth: Option<&[f64]>) -> Result<OptimizerState> {
    if obj.problem.parameterization != Parameterization::FourierLog {
        return Err(Error::Config("adaptive Fourier descent needs a 1D problem".into()));
    }
    descend(obj, config, vec![config.initial_log_conductivity], truth, true)
}

/// Plain descent on per-pixel `ln a`, from a constant start.
pub fn gd_2d(config: &GDConfig, obj: &Objective, truth: Option<&[f64]>) -> Result<OptimizerState> {
    if obj.problem.parameterization != Parameterization::PixelLog {
        return Err(Error::Config("pixel descent needs a 2D problem".into()));
    }
    let theta0 = vec![config.initial_log_conductivity; obj.problem.grid.len()];
    descend(obj, config, theta0, truth, false)
}

/// Plain descent from an arbitrary start, without mode growth.
pub fn gd_from(config: &GDConfig, obj: &Objective, theta0: Vec<f64>, truth: Option<&[f64]>) -> Result<OptimizerState> {
    descend(obj, config, theta0, truth, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::integrate;
    use crate::grid::{Grid1D, Grid2D};
    use crate::sensing::{measure, path_circle_1d, path_orbits_2d};
    use std::f64::consts::PI;

    fn problem_1d(j: usize) -> InverseProblem {
        let g = Grid1D::new(j).unwrap();
        let u0 = g.coords().iter().map(|x| (2.0 * PI * x).sin()).collect();
        InverseProblem::new(Grid::D1(g), u0, HeatSource::SinPiT).unwrap()
    }

    fn observe(p: &InverseProblem, a: &[f64], m: usize) -> MeasurementSet {
        let paths = match p.grid {
            Grid::D1(_) => vec![path_circle_1d(m, 1.0)],
            Grid::D2(_) => path_orbits_2d(m, 1.0),
        };
        let mut times = vec![0.0];
        times.extend(paths[0].times.iter().copied());
        let op = HeatOperator::new(p.grid, a).unwrap();
        let traj = integrate(&op, &p.u0, &p.source, &times).unwrap();
        measure(&traj, &paths, &p.grid, 0.0, 0).unwrap()
    }

    #[test]
    fn relative_error_examples() {
        let t = [0.01, 0.02, 0.015, 0.01];
        assert_eq!(relative_error(&t, &t).unwrap(), 0.0);
        let twice: Vec<f64> = t.iter().map(|v| 2.0 * v).collect();
        assert!((relative_error(&twice, &t).unwrap() - 1.0).abs() < 1e-15);
        let c = 0.003;
        let shifted: Vec<f64> = t.iter().map(|v| v + c).collect();
        let norm = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((relative_error(&shifted, &t).unwrap() - c * 2.0 / norm).abs() < 1e-14);
        assert!(matches!(relative_error(&t, &[0.0; 4]), Err(Error::ZeroNormTruth)));
        assert!(matches!(
            relative_error(&t[..3], &t),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn loss_vanishes_at_truth_and_ignores_duplication() {
        let p = problem_1d(16);
        let theta = [0.015f64.ln(), 0.2, -0.1];
        let a = p.conductivity(&theta).unwrap();
        let obs = observe(&p, &a, 20);
        let obj = Objective::new(p.clone(), &obs).unwrap();
        assert!(obj.loss(&theta).unwrap() < 1e-18);
        let (_, g) = obj.loss_and_grad(&theta).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12));

        let other = [0.01f64.ln()];
        let l1 = obj.loss(&other).unwrap();
        let mut doubled = obs.clone();
        doubled.records.extend(obs.records.iter().copied());
        let l2 = loss(&other, &doubled, &p).unwrap();
        assert!((l1 - l2).abs() <= 1e-15 * l1);
    }

    #[test]
    fn adjoint_matches_finite_differences_small() {
        let p = problem_1d(10);
        let truth = p.conductivity(&[0.02f64.ln(), 0.3, 0.0, -0.2]).unwrap();
        let obs = observe(&p, &truth, 10);
        let obj = Objective::new(p, &obs).unwrap();
        let theta = [0.012f64.ln(), 0.05, -0.1, 0.02];
        let ga = obj.grad_adjoint(&theta).unwrap();
        let gf = obj.grad_fd(&theta, 1e-6).unwrap();
        for (a, f) in ga.iter().zip(&gf) {
            assert!((a - f).abs() <= 1e-5 * f.abs().max(1e-8), "{a} vs {f}");
        }
    }

    #[test]
    fn pixel_gradient_matches_finite_differences() {
        let g = Grid2D::new(4).unwrap();
        let u0: Vec<f64> = (1..=4)
            .flat_map(|i| (1..=4).map(move |j| (i * 3 + j * j) as f64 * 0.1))
            .collect();
        let p = InverseProblem::new(Grid::D2(g), u0, HeatSource::Sin2PiT).unwrap();
        let truth: Vec<f64> = (0..16).map(|k| 0.01 + 0.001 * k as f64).collect();
        let obs = observe(&p, &truth, 8);
        let obj = Objective::new(p, &obs).unwrap();
        let theta: Vec<f64> = (0..16).map(|k| (0.012 + 0.0005 * (k % 5) as f64).ln()).collect();
        let ga = obj.grad_adjoint(&theta).unwrap();
        let gf = obj.grad_fd(&theta, 1e-6).unwrap();
        let scale = gf.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, f) in ga.iter().zip(&gf) {
            assert!((a - f).abs() <= 1e-5 * scale, "{a} vs {f}");
        }
    }

    #[test]
    fn branch_logic_extremes() {
        let p = problem_1d(12);
        let truth = p.conductivity(&[0.015f64.ln(), 0.1]).unwrap();
        let obs = observe(&p, &truth, 12);
        let obj = Objective::new(p, &obs).unwrap();

        let grow = GDConfig {
            epsilon: f64::INFINITY,
            max_epoch: 6,
            n_max: 2,
            ..GDConfig::default_1d()
        };
        let s = adaptive_fs_gd(&grow, &obj, Some(&truth)).unwrap();
        let dims: Vec<usize> = s.history.iter().map(|r| r.dim_theta).collect();
        assert_eq!(dims, vec![2, 3, 4, 5, 5, 5]);
        assert_eq!(s.history[3].loss, s.initial.loss);

        let flat = GDConfig {
            epsilon: 0.0,
            max_epoch: 5,
            ..GDConfig::default_1d()
        };
        let s = adaptive_fs_gd(&flat, &obj, Some(&truth)).unwrap();
        assert!(s.history.iter().all(|r| r.dim_theta == 1));
        assert_eq!(s.history.len(), 5);
        assert_eq!(s.final_row().loss, s.history[4].loss);
    }

    #[test]
    fn history_is_consistent_and_csv_has_every_epoch() {
        let p = problem_1d(12);
        let truth = p.conductivity(&[0.015f64.ln(), 0.1]).unwrap();
        let obs = observe(&p, &truth, 12);
        let obj = Objective::new(p, &obs).unwrap();
        let cfg = GDConfig {
            max_epoch: 4,
            epsilon: 1e-3,
            ..GDConfig::default_1d()
        };
        let s = adaptive_fs_gd(&cfg, &obj, Some(&truth)).unwrap();
        assert_eq!(obj.loss(&s.theta).unwrap(), s.final_row().loss);
        let mut buf = Vec::new();
        s.write_log_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 1 + 4);
        assert!(text.starts_with("epoch,dim_theta,loss,relative_error,grad_norm2\n0,1,"));
    }

    #[test]
    fn rejects_wrong_shapes() {
        let p = problem_1d(8);
        let obs = observe(&p, &[0.01; 8], 4);
        let obj = Objective::new(p.clone(), &obs).unwrap();
        assert!(obj.loss(&[]).is_err());
        let p2 = InverseProblem::new(Grid::D2(Grid2D::new(4).unwrap()), vec![0.0; 16], HeatSource::Zero).unwrap();
        assert!(matches!(
            p2.conductivity(&[0.0; 15]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(InverseProblem::new(Grid::D1(Grid1D::new(8).unwrap()), vec![0.0; 7], HeatSource::Zero).is_err());
        assert!(GDConfig {
            gamma: 0.0,
            ..GDConfig::default_1d()
        }
        .validate()
        .is_err());
    }
}
