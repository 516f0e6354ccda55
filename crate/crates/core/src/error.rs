use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least 3 nodes per axis, got {0}")]
    GridTooSmall(usize),

    #[error("conductivity must be strictly positive, entry {index} is {value}")]
    NonPositiveConductivity { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("time grid must start at 0 and increase strictly")]
    NonMonotoneTimes,

    #[error("operator is not symmetric (max deviation {0:e})")]
    AsymmetricOperator(f64),

    #[error("unknown conductivity profile `{0}`")]
    UnknownProfile(String),

    #[error("pixel value {value} at ({row}, {col}) is outside [0, 1]")]
    PixelOutOfRange { row: usize, col: usize, value: f64 },

    #[error("image must be square, got {rows}x{cols}")]
    NonSquareImage { rows: usize, cols: usize },

    #[error("{n_modes} Fourier modes alias on a grid of {nodes} nodes (need 2n+1 <= J)")]
    TooManyModes { n_modes: usize, nodes: usize },

    #[error("measurement time {0} is not a node of the trajectory")]
    MissingMeasurementTime(f64),

    #[error("sqrt({sensors}) does not divide the grid size {nodes}")]
    StaticLatticeMismatch { sensors: usize, nodes: usize },

    #[error("relative error undefined for a zero-norm reference")]
    ZeroNormTruth,

    #[error("heat source is not spatially constant")]
    NotSpatiallyConstant,

    #[error(
        "conductivity is not recoverable: the initial temperature is spatially constant and the \
         heat source is spatially uniform, so the solution never depends on the conductivity \
         (non-recoverability of conductivity)"
    )]
    NonRecoverable,

    #[error("simulation produced non-finite values")]
    NonFinite,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to parse {what}: {msg}")]
    Parse { what: String, msg: String },

    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }

    pub(crate) fn parse(what: impl Into<String>, msg: impl ToString) -> Self {
        Error::Parse {
            what: what.into(),
            msg: msg.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
