mod args;
mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use heatinv::forward::{integrate_with, HeatOperator, HeatSource, StepControl};
use heatinv::grid::Grid;
use heatinv::image::GrayImage;
use heatinv::pipeline::{build_truth, compare_configs, run_experiment, RunOptions};
use heatinv::plot::{save_heatmap, LineChart, Series};
use heatinv::sensing::{measurement_times, SensorConfig};
use heatinv::spectral::{eigensystem, sensitivity_curve, sensitivity_report, write_sensitivity_csv};

use args::{Cli, Command, CompareArgs, ExperimentArgs, PrepArgs, SpectrumArgs};
use config::{experiment_spec, out_dir, problem_spec, DEFAULT_OUT};

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_forward(a: &ExperimentArgs) -> Result<()> {
    let spec = experiment_spec(a)?;
    let out = out_dir(&a.problem);
    let grid = spec.grid()?;
    let truth = build_truth(&spec, &grid)?;
    let u0 = spec.initial_condition.sample(&grid)?;
    let src = HeatSource::from(spec.source);
    let op = HeatOperator::new(grid, &truth)?;
    let step = StepControl {
        safety: spec.step_safety,
    };
    let mut times = vec![0.0];
    times.extend(measurement_times(spec.measurements, spec.t_final));
    let traj = integrate_with(&op, &u0, &src, &times, step)?;

    ensure_dir(&out)?;
    fs::write(out.join("spec.json"), serde_json::to_string_pretty(&spec)?)?;
    let path = out.join("trajectory.csv");
    let mut w = create(&path)?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    println!(
        "wrote {} ({} times, {} nodes)",
        path.display(),
        traj.times.len(),
        grid.len()
    );

    if a.problem.plots {
        let snap_times = [0.0, 0.5 * spec.t_final, spec.t_final];
        let snaps = integrate_with(&op, &u0, &src, &snap_times, step)?;
        match &grid {
            Grid::D1(g) => {
                let xs = g.coords();
                LineChart {
                    title: "Temperature snapshots".into(),
                    x_label: "x".into(),
                    y_label: "u".into(),
                    log_y: false,
                    series: snap_times
                        .iter()
                        .zip(&snaps.states)
                        .map(|(t, u)| {
                            Series::new(format!("t = {t}"), xs.iter().copied().zip(u.iter().copied()).collect())
                        })
                        .collect(),
                }
                .save(&out.join("snapshots.svg"))?;
            }
            Grid::D2(g) => {
                let range = snaps
                    .states
                    .iter()
                    .flatten()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                        (lo.min(v), hi.max(v))
                    });
                for (k, (t, u)) in snap_times.iter().zip(&snaps.states).enumerate() {
                    save_heatmap(
                        &out.join(format!("snapshot_{k}.svg")),
                        &format!("u at t = {t}"),
                        u,
                        g.nodes_per_axis(),
                        Some(range),
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn cmd_invert(a: &ExperimentArgs) -> Result<()> {
    let spec = experiment_spec(a)?;
    let opts = RunOptions {
        out_dir: Some(out_dir(&a.problem)),
        plots: a.problem.plots,
    };
    let r = run_experiment(&spec, &opts)?;
    println!("loss={:e} rel_err={:e}", r.final_loss(), r.final_relative_error());
    Ok(())
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<()> {
    let spec = problem_spec(&a.problem)?;
    spec.validate()?;
    let out = out_dir(&a.problem);
    let grid = spec.grid()?;
    let truth = build_truth(&spec, &grid)?;
    let es = eigensystem(&HeatOperator::new(grid, &truth)?)?;
    let rows = sensitivity_report(&es, a.modes);

    ensure_dir(&out)?;
    let path = out.join("spectrum.csv");
    let mut w = create(&path)?;
    write_sensitivity_csv(&rows, &mut w)?;
    w.flush()?;
    println!("wrote {} ({} non-null modes)", path.display(), rows.len() - 1);

    if a.problem.plots {
        let u0 = spec.initial_condition.sample(&grid)?;
        let shown: Vec<_> = rows.iter().filter(|r| !r.is_null()).take(6).collect();
        let horizon = shown.iter().map(|r| 3.0 * r.t_star).fold(0.0, f64::max);
        let times: Vec<f64> = (0..=400).map(|n| n as f64 / 400.0 * horizon).collect();
        let series = shown
            .iter()
            .map(|r| {
                let c = sensitivity_curve(&es, r.k, &u0, 1, &times)?;
                Ok(Series::new(format!("k = {}", r.k), c.samples))
            })
            .collect::<Result<Vec<_>>>()?;
        LineChart {
            title: "Sensitivity at node 1".into(),
            x_label: "t".into(),
            y_label: "|du/dlambda_k|".into(),
            log_y: false,
            series,
        }
        .save(&out.join("spectrum.svg"))?;
    }
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let spec = experiment_spec(&a.experiment)?;
    let configs = match &a.configs {
        Some(names) => names
            .iter()
            .map(|n| n.trim().parse())
            .collect::<heatinv::Result<Vec<SensorConfig>>>()?,
        None => vec![SensorConfig::Orbits4, SensorConfig::Static16, SensorConfig::Static64],
    };
    let levels = a.levels.clone().unwrap_or_else(|| vec![1e-4, 1e-5, 1e-6]);
    let opts = RunOptions {
        out_dir: Some(out_dir(&a.experiment.problem)),
        plots: a.experiment.problem.plots,
    };
    let frontier = compare_configs(&spec, &configs, &levels, &opts)?;
    let stdout = std::io::stdout();
    frontier.write_csv(stdout.lock())?;
    Ok(())
}

fn cmd_prep_image(a: &PrepArgs) -> Result<()> {
    let img = GrayImage::load(&a.image)?;
    let img = if img.side()? == a.grid_size {
        img
    } else {
        img.resize_bilinear(a.grid_size)?
    };
    let out = a.out.clone().unwrap_or_else(|| DEFAULT_OUT.into());
    ensure_dir(&out)?;
    let stem = a.image.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
    let path = out.join(format!("{stem}_{}.pgm", a.grid_size));
    img.save_pgm(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use heatinv::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::NonRecoverable => 3,
                E::NonFinite | E::AsymmetricOperator(_) | E::ZeroNormTruth => 1,
                _ => 2,
            };
        }
        if cause.is::<serde_json::Error>() || cause.is::<std::io::Error>() {
            return 2;
        }
    }
    1
}

#[cfg(feature = "parallel")]
fn configure_pool(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker pool")?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_pool(_jobs: Option<usize>) -> Result<()> {
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_pool(cli.jobs).and_then(|()| match &cli.command {
        Command::Forward(a) => cmd_forward(a),
        Command::Invert(a) => cmd_invert(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Compare(a) => cmd_compare(a),
        Command::PrepImage(a) => cmd_prep_image(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
