use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const CONFIG_SCHEMA: &str = "\
CONFIG FILE (--config, JSON object; every key optional, unknown keys are rejected):
  dimension          1 | 2
  grid_size          nodes per axis J
  truth              {\"builtin\": \"heaviside\" | \"piecelinear3s\" | \"piecelinear4w\"}
                     or {\"image\": \"<path to .pgm or .csv>\"}
  initial_condition  \"sin_2pix\" | \"coscos\" | {\"constant\": <value>}
  source             \"zero\" | \"sin_pi_t\" | \"sin_2pi_t\"
  sensors            \"circle\" | \"orbits4\" | \"static16\" | \"static64\"
  measurements       measurement count M
  t_final            final time
  noise_sd           additive Gaussian noise level
  seed               noise seed
  step_safety        fraction of the explicit stability step used by RK4
  gd                 {\"gamma\", \"epsilon\", \"max_epoch\", \"n_max\", \"initial_log_conductivity\"}
Flags given on the command line override values from the file.

EXIT CODES: 0 success, 1 numerical failure, 2 configuration error, 3 non-recoverable problem";

#[derive(Debug, Parser)]
#[command(
    name = "heatinv",
    version,
    about = "Conductivity reconstruction for the periodic heat equation"
)]
#[command(after_help = CONFIG_SCHEMA)]
pub struct Cli {
    /// Worker threads for parallel sections [default: logical processors]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the truth and write the trajectory (plus snapshots with --plots)
    #[command(after_help = CONFIG_SCHEMA)]
    Forward(ExperimentArgs),
    /// Reconstruct the conductivity from simulated sensor readings
    #[command(after_help = CONFIG_SCHEMA)]
    Invert(ExperimentArgs),
    /// Eigen-decomposition of the truth operator and sensitivity windows
    #[command(after_help = CONFIG_SCHEMA)]
    Spectrum(SpectrumArgs),
    /// Run several sensor layouts on one truth and tabulate the loss/error frontier
    #[command(after_help = CONFIG_SCHEMA)]
    Compare(CompareArgs),
    /// Resize a grayscale image to the grid and write it as PGM
    PrepImage(PrepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// JSON experiment file merged under the flags [default: none]
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Spatial dimension, 1 or 2 [default: 2 with --image, else 1]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Built-in 1D truth: heaviside, piecelinear3s, piecelinear4w [default: heaviside]
    #[arg(long)]
    pub truth: Option<String>,
    /// Grayscale truth image for 2D (.pgm or .csv) [default: none, required in 2D]
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Nodes per axis [default: 100 in 1D, 32 in 2D]
    #[arg(long = "J", value_name = "J")]
    pub grid_size: Option<usize>,
    /// Initial temperature: sin_2pix, coscos, constant or constant:<v> [default: sin_2pix in 1D, coscos in 2D]
    #[arg(long)]
    pub u0: Option<String>,
    /// Heat source: zero, sin_pi_t, sin_2pi_t [default: sin_pi_t in 1D, sin_2pi_t in 2D]
    #[arg(long)]
    pub source: Option<String>,
    /// Final time [default: 1]
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Fraction of the explicit stability step used by RK4 [default: 0.1]
    #[arg(long)]
    pub step_safety: Option<f64>,
    /// Output directory [default: heatinv-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write SVG plots [default: off]
    #[arg(long)]
    pub plots: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Sensor layout: circle, orbits4, static16, static64 [default: circle in 1D, orbits4 in 2D]
    #[arg(long)]
    pub sensors: Option<String>,
    /// Measurement count M [default: 100 in 1D, 256 in 2D]
    #[arg(long)]
    pub measurements: Option<usize>,
    /// Maximum epochs [default: 500]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Highest Fourier frequency N, so dim theta <= 2N+1 [default: 9]
    #[arg(long)]
    pub modes: Option<usize>,
    /// Step size [default: 10 in 1D, 5000 in 2D]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Squared-gradient threshold for adding a mode [default: 1e-8]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Additive Gaussian noise on readings [default: 0]
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Noise seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Number of slowest non-null modes to report [default: all]
    #[arg(long)]
    pub modes: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Comma-separated sensor layouts, at least two [default: orbits4,static16,static64]
    #[arg(long, value_delimiter = ',')]
    pub configs: Option<Vec<String>>,
    /// Comma-separated descending loss levels [default: 1e-4,1e-5,1e-6]
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct PrepArgs {
    /// Source image (.pgm or .csv), values scaled to [0, 1] [required]
    #[arg(long)]
    pub image: PathBuf,
    /// Target side length
    #[arg(long = "J", value_name = "J", default_value_t = 32)]
    pub grid_size: usize,
    /// Output directory [default: heatinv-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}
