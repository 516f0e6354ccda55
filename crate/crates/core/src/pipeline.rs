//! End-to-end experiments: build the truth, simulate, measure, reconstruct,
//! and write a run directory; plus the sensor-layout comparison frontier.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::field::{image_to_conductivity, make_truth_1d, Profile1D};
use crate::forward::{integrate_with, HeatOperator, HeatSource, SourceKind, StepControl, Trajectory};
use crate::grid::{Grid, Grid1D, Grid2D};
use crate::image::GrayImage;
use crate::inverse::{
    adaptive_fs_gd, gd_2d, write_reconstruction_csv, GDConfig, InverseProblem, Objective, OptimizerState,
};
use crate::plot::{save_heatmap, LineChart, Series};
use crate::sensing::{measure, measurement_times, MeasurementSet, SensorConfig};
use crate::spectral::{check_recoverable, Recoverability};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSource {
    Builtin(Profile1D),
    /// Grayscale PGM or CSV, resized to the grid when its side differs.
    Image(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// `sin(2πx)` (1D)
    #[serde(rename = "sin_2pix")]
    Sin2PiX,
    /// `cos(2πx)cos(2πy)` (2D)
    #[serde(rename = "coscos")]
    CosCos,
    Constant(f64),
}

impl InitialCondition {
    pub fn for_dim(dim: usize) -> Self {
        if dim == 1 {
            InitialCondition::Sin2PiX
        } else {
            InitialCondition::CosCos
        }
    }

    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        match (self, grid) {
            (InitialCondition::Constant(c), g) => Ok(vec![*c; g.len()]),
            (InitialCondition::Sin2PiX, Grid::D1(g)) => Ok(g.coords().iter().map(|x| (2.0 * PI * x).sin()).collect()),
            (InitialCondition::CosCos, Grid::D2(g)) => Ok((0..g.len())
                .map(|k| {
                    let (i, j) = g.unflat(k + 1);
                    let (x, y) = g.coord(i, j);
                    (2.0 * PI * x).cos() * (2.0 * PI * y).cos()
                })
                .collect()),
            _ => Err(Error::Config(format!(
                "initial condition {self:?} does not match a {}D grid",
                grid.dim()
            ))),
        }
    }
}

impl std::str::FromStr for InitialCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "sin_2pix" | "sin" => Ok(InitialCondition::Sin2PiX),
            "coscos" | "cos_cos" => Ok(InitialCondition::CosCos),
            "constant" => Ok(InitialCondition::Constant(1.0)),
            other => other
                .strip_prefix("constant:")
                .and_then(|v| v.parse().ok())
                .map(InitialCondition::Constant)
                .ok_or_else(|| Error::Config(format!("unknown initial condition `{s}`"))),
        }
    }
}

/// A complete, reproducible experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub dimension: usize,
    pub grid_size: usize,
    pub truth: TruthSource,
    pub initial_condition: InitialCondition,
    pub source: SourceKind,
    pub sensors: SensorConfig,
    pub measurements: usize,
    pub t_final: f64,
    pub noise_sd: f64,
    pub gd: GDConfig,
    pub seed: u64,
    pub step_safety: f64,
}

impl ExperimentSpec {
    /// 1D defaults: `J = M = 100`, `sin(2πx)`, `sin(πt)`, one circling sensor.
    pub fn default_1d(profile: Profile1D) -> Self {
        Self {
            dimension: 1,
            grid_size: 100,
            truth: TruthSource::Builtin(profile),
            initial_condition: InitialCondition::Sin2PiX,
            source: SourceKind::SinPiT,
            sensors: SensorConfig::Circle1d,
            measurements: 100,
            t_final: 1.0,
            noise_sd: 0.0,
            gd: GDConfig::default_1d(),
            seed: 0,
            step_safety: StepControl::default().safety,
        }
    }

    /// 2D defaults: `J = 32`, `M = 256`, `cos(2πx)cos(2πy)`, `sin(2πt)`, four orbits.
    pub fn default_2d(image: impl Into<PathBuf>) -> Self {
        Self {
            dimension: 2,
            grid_size: 32,
            truth: TruthSource::Image(image.into()),
            initial_condition: InitialCondition::CosCos,
            source: SourceKind::Sin2PiT,
            sensors: SensorConfig::Orbits4,
            measurements: 256,
            gd: GDConfig::default_2d(),
            ..Self::default_1d(Profile1D::Heaviside)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 1 && self.dimension != 2 {
            return Err(Error::Config(format!(
                "dimension must be 1 or 2, got {}",
                self.dimension
            )));
        }
        if self.sensors.dim() != self.dimension {
            return Err(Error::Config(format!(
                "sensor layout `{}` cannot be used in {}D",
                self.sensors, self.dimension
            )));
        }
        match (&self.truth, self.dimension) {
            (TruthSource::Builtin(_), 2) => {
                return Err(Error::Config("built-in profiles are 1D; use an image in 2D".into()))
            }
            (TruthSource::Image(_), 1) => {
                return Err(Error::Config(
                    "image truths are 2D; use a built-in profile in 1D".into(),
                ))
            }
            _ => {}
        }
        if self.measurements == 0 {
            return Err(Error::Config("measurement count must be at least 1".into()));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("t_final must be positive, got {}", self.t_final)));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sd must be non-negative, got {}",
                self.noise_sd
            )));
        }
        if !(self.step_safety > 0.0) {
            return Err(Error::Config(format!(
                "step_safety must be positive, got {}",
                self.step_safety
            )));
        }
        self.gd.validate()
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(match self.dimension {
            1 => Grid::D1(Grid1D::new(self.grid_size)?),
            _ => Grid::D2(Grid2D::new(self.grid_size)?),
        })
    }

    fn step(&self) -> StepControl {
        StepControl {
            safety: self.step_safety,
        }
    }
}

/// Ground truth sampled on the experiment grid.
pub fn build_truth(spec: &ExperimentSpec, grid: &Grid) -> Result<Vec<f64>> {
    match (&spec.truth, grid) {
        (TruthSource::Builtin(p), Grid::D1(g)) => Ok(make_truth_1d(p.name(), g)?.into_values()),
        (TruthSource::Image(path), Grid::D2(g)) => {
            let mut img = GrayImage::load(path)?;
            if img.side()? != g.nodes_per_axis() {
                img = img.resize_bilinear(g.nodes_per_axis())?;
            }
            Ok(image_to_conductivity(&img)?.into_values())
        }
        _ => Err(Error::Config("truth source does not match the grid dimension".into())),
    }
}

/// Truth, problem and the truth trajectory on `[0, t_1, …, t_M]`, shared by
/// every sensor layout of one comparison.
#[derive(Debug, Clone)]
pub struct PreparedExperiment {
    pub grid: Grid,
    pub truth: Vec<f64>,
    pub problem: InverseProblem,
    pub trajectory: Trajectory,
}

pub fn prepare(spec: &ExperimentSpec) -> Result<PreparedExperiment> {
    spec.validate()?;
    let grid = spec.grid()?;
    let truth = build_truth(spec, &grid)?;
    let u0 = spec.initial_condition.sample(&grid)?;
    let source = HeatSource::from(spec.source);
    if check_recoverable(&u0, &source) == Recoverability::Degenerate {
        return Err(Error::NonRecoverable);
    }
    let problem = InverseProblem::new(grid, u0, source)?.with_step(spec.step());
    let mut times = vec![0.0];
    times.extend(measurement_times(spec.measurements, spec.t_final));
    let op = HeatOperator::new(grid, &truth)?;
    let trajectory = integrate_with(&op, &problem.u0, &problem.source, &times, problem.step)?;
    Ok(PreparedExperiment {
        grid,
        truth,
        problem,
        trajectory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub final_loss: f64,
    pub relative_error: f64,
    pub initial_loss: f64,
    pub initial_relative_error: f64,
    pub residual_max: f64,
    pub dim_theta: usize,
    pub epochs: usize,
    pub seed: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub truth: Vec<f64>,
    pub reconstruction: Vec<f64>,
    pub measurements: MeasurementSet,
    pub state: OptimizerState,
    pub summary: Summary,
}

impl ExperimentResult {
    pub fn final_loss(&self) -> f64 {
        self.summary.final_loss
    }

    pub fn final_relative_error(&self) -> f64 {
        self.summary.relative_error
    }
}

/// Where and how much to write.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub plots: bool,
}

fn optimize(spec: &ExperimentSpec, obj: &Objective, truth: &[f64]) -> Result<OptimizerState> {
    match spec.dimension {
        1 => adaptive_fs_gd(&spec.gd, obj, Some(truth)),
        _ => gd_2d(&spec.gd, obj, Some(truth)),
    }
}

fn solve(spec: &ExperimentSpec, prep: &PreparedExperiment, sensors: SensorConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    let paths = sensors.paths(&prep.grid, spec.measurements, spec.t_final)?;
    let measurements = measure(&prep.trajectory, &paths, &prep.grid, spec.noise_sd, spec.seed)?;
    let obj = Objective::new(prep.problem.clone(), &measurements)?;
    let state = optimize(spec, &obj, &prep.truth)?;
    let reconstruction = prep.problem.conductivity(&state.theta)?;
    let last = state.final_row();
    let summary = Summary {
        final_loss: last.loss,
        relative_error: last.relative_error,
        initial_loss: state.initial.loss,
        initial_relative_error: state.initial.relative_error,
        residual_max: obj.residual_max(&state.theta)?,
        dim_theta: state.theta.len(),
        epochs: state.epoch,
        seed: spec.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let mut spec = spec.clone();
    spec.sensors = sensors;
    Ok(ExperimentResult {
        spec,
        truth: prep.truth.clone(),
        reconstruction,
        measurements,
        state,
        summary,
    })
}

/// Runs one experiment and, when `opts.out_dir` is set, writes its run
/// directory (`spec.json`, `measurements.csv`, `training_log.csv`,
/// `reconstruction.csv`, `summary.json`, optional SVG plots).
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<ExperimentResult> {
    let prep = prepare(spec)?;
    let result = solve(spec, &prep, spec.sensors)?;
    if let Some(dir) = &opts.out_dir {
        write_run_dir(&result, &prep.grid, dir, opts.plots)?;
    }
    Ok(result)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn write_run_dir(result: &ExperimentResult, grid: &Grid, dir: &Path, plots: bool) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_with(&dir.join("spec.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &result.spec)?;
        writeln!(w)
    })?;
    write_with(&dir.join("measurements.csv"), |w| result.measurements.write_csv(w))?;
    write_with(&dir.join("training_log.csv"), |w| result.state.write_log_csv(w))?;
    write_with(&dir.join("reconstruction.csv"), |w| {
        write_reconstruction_csv(grid, &result.reconstruction, w)
    })?;
    write_with(&dir.join("summary.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &result.summary)?;
        writeln!(w)
    })?;
    if plots {
        write_plots(result, grid, dir)?;
    }
    Ok(())
}

fn write_plots(result: &ExperimentResult, grid: &Grid, dir: &Path) -> Result<()> {
    let rows: Vec<_> = result.state.rows().collect();
    LineChart {
        title: "Training loss".into(),
        x_label: "epoch".into(),
        y_label: "loss".into(),
        log_y: true,
        series: vec![Series::new(
            "loss",
            rows.iter().map(|r| (r.epoch as f64, r.loss)).collect(),
        )],
    }
    .save(&dir.join("loss.svg"))?;
    LineChart {
        title: "Relative error".into(),
        x_label: "epoch".into(),
        y_label: "relative error".into(),
        log_y: true,
        series: vec![Series::new(
            "relative error",
            rows.iter().map(|r| (r.epoch as f64, r.relative_error)).collect(),
        )],
    }
    .save(&dir.join("error.svg"))?;
    match grid {
        Grid::D1(g) => {
            let xs = g.coords();
            let pair = |v: &[f64]| xs.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
            LineChart {
                title: "Conductivity".into(),
                x_label: "x".into(),
                y_label: "a(x)".into(),
                log_y: false,
                series: vec![
                    Series::new("truth", pair(&result.truth)),
                    Series::new("reconstruction", pair(&result.reconstruction)),
                ],
            }
            .save(&dir.join("conductivity.svg"))?;
        }
        Grid::D2(g) => {
            let range = result
                .truth
                .iter()
                .chain(&result.reconstruction)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            let side = g.nodes_per_axis();
            save_heatmap(&dir.join("truth.svg"), "truth", &result.truth, side, Some(range))?;
            save_heatmap(
                &dir.join("reconstruction.svg"),
                "reconstruction",
                &result.reconstruction,
                side,
                Some(range),
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierRow {
    pub config: String,
    pub loss_level: f64,
    /// First epoch with loss at or below the level, `None` if never reached.
    pub epoch: Option<usize>,
    pub rel_err: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Frontier {
    pub rows: Vec<FrontierRow>,
    pub results: Vec<ExperimentResult>,
}

impl Frontier {
    pub fn lookup(&self, config: &str, level: f64) -> Option<&FrontierRow> {
        self.rows.iter().find(|r| r.config == config && r.loss_level == level)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "config,loss_level,epoch,rel_err")?;
        for r in &self.rows {
            match (r.epoch, r.rel_err) {
                (Some(e), Some(v)) => writeln!(w, "{},{:e},{},{:e}", r.config, r.loss_level, e, v)?,
                _ => writeln!(w, "{},{:e},unreached,", r.config, r.loss_level)?,
            }
        }
        Ok(())
    }
}

/// Crossing epochs and errors of one optimisation run at each loss level.
pub fn frontier_rows(config: &str, state: &OptimizerState, levels: &[f64]) -> Vec<FrontierRow> {
    levels
        .iter()
        .map(|&level| {
            let hit = state.rows().find(|r| r.loss <= level);
            FrontierRow {
                config: config.to_string(),
                loss_level: level,
                epoch: hit.map(|r| r.epoch),
                rel_err: hit.map(|r| r.relative_error),
            }
        })
        .collect()
}

/// Runs one reconstruction per sensor layout, all measuring the same truth
/// trajectory, and tabulates the relative error at each loss level.
pub fn compare_configs(
    base: &ExperimentSpec,
    configs: &[SensorConfig],
    loss_levels: &[f64],
    opts: &RunOptions,
) -> Result<Frontier> {
    if configs.len() < 2 {
        return Err(Error::Config("comparison needs at least two sensor layouts".into()));
    }
    if loss_levels.is_empty() || loss_levels.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Config(
            "loss levels must be non-empty and strictly descending".into(),
        ));
    }
    let prep = prepare(base)?;
    let results = exec::map(configs, |&c| solve(base, &prep, c))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let rows = results
        .iter()
        .flat_map(|r| frontier_rows(r.spec.sensors.name(), &r.state, loss_levels))
        .collect();
    let frontier = Frontier { rows, results };
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_with(&dir.join("frontier.csv"), |w| frontier.write_csv(w))?;
        for (k, r) in frontier.results.iter().enumerate() {
            let sub = dir.join(format!("{:02}_{}", k + 1, r.spec.sensors.name()));
            write_run_dir(r, &prep.grid, &sub, opts.plots)?;
        }
        if opts.plots {
            LineChart {
                title: "Relative error against loss".into(),
                x_label: "log10 loss".into(),
                y_label: "relative error".into(),
                log_y: false,
                series: frontier
                    .results
                    .iter()
                    .map(|r| {
                        Series::new(
                            r.spec.sensors.name(),
                            r.state
                                .rows()
                                .filter(|row| row.loss > 0.0)
                                .map(|row| (row.loss.log10(), row.relative_error))
                                .collect(),
                        )
                    })
                    .collect(),
            }
            .save(&dir.join("frontier.svg"))?;
        }
    }
    Ok(frontier)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_1d() -> ExperimentSpec {
        let mut s = ExperimentSpec::default_1d(Profile1D::Heaviside);
        s.grid_size = 16;
        s.measurements = 16;
        s.gd.max_epoch = 5;
        s
    }

    #[test]
    fn spec_round_trips_through_json() {
        let s = ExperimentSpec::default_2d("digits/x.pgm");
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"coscos\"") && text.contains("\"sin_2pi_t\"") && text.contains("\"orbits4\""));
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let bad = text.replacen("\"seed\"", "\"sead\"", 1);
        assert!(serde_json::from_str::<ExperimentSpec>(&bad).is_err());
    }

    #[test]
    fn validation_catches_mismatched_layouts() {
        let mut s = quick_1d();
        s.sensors = SensorConfig::Orbits4;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = quick_1d();
        s.dimension = 2;
        assert!(s.validate().is_err());
    }

    #[test]
    fn degenerate_spec_aborts() {
        let mut s = quick_1d();
        s.initial_condition = InitialCondition::Constant(5.0);
        assert!(matches!(
            run_experiment(&s, &RunOptions::default()),
            Err(Error::NonRecoverable)
        ));
    }

    #[test]
    fn history_length_and_final_values() {
        let r = run_experiment(&quick_1d(), &RunOptions::default()).unwrap();
        assert_eq!(r.state.history.len(), 5);
        assert_eq!(r.final_loss(), r.state.history[4].loss);
        assert_eq!(r.final_relative_error(), r.state.history[4].relative_error);
    }

    #[test]
    fn frontier_marks_unreached_levels() {
        let r = run_experiment(&quick_1d(), &RunOptions::default()).unwrap();
        let rows = frontier_rows("circle", &r.state, &[1.0, 1e-30]);
        assert_eq!(rows[0].epoch, Some(0));
        assert_eq!(rows[1].epoch, None);
        let f = Frontier { rows, results: vec![] };
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(2).unwrap().ends_with(",unreached,"));
    }

    #[test]
    fn initial_condition_parsing() {
        assert_eq!(
            "sin_2pix".parse::<InitialCondition>().unwrap(),
            InitialCondition::Sin2PiX
        );
        assert_eq!(
            "constant:2.5".parse::<InitialCondition>().unwrap(),
            InitialCondition::Constant(2.5)
        );
        assert!("gauss".parse::<InitialCondition>().is_err());
    }
}
