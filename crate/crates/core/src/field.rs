//! Conductivity fields and their log-space parameterisations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Grid1D, Grid2D};
use crate::image::GrayImage;

/// Value of the `k`-th Fourier basis function of `ln a` at `x`:
/// `1` for `k = 0`, `sin(2mπx)` for `k = 2m-1`, `cos(2mπx)` for `k = 2m`.
pub fn fourier_basis(k: usize, x: f64) -> f64 {
    use std::f64::consts::PI;
    if k == 0 {
        return 1.0;
    }
    let m = k.div_ceil(2) as f64;
    if k % 2 == 1 {
        (2.0 * m * PI * x).sin()
    } else {
        (2.0 * m * PI * x).cos()
    }
}

/// `ln a(x; θ) = θ₀ + Σ θ_{2k-1} sin(2kπx) + Σ θ_{2k} cos(2kπx)`.
///
/// Any dimension ≥ 1 is valid; an even dimension simply carries an unpaired
/// sine coefficient for its top frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierLogConductivity1D {
    theta: Vec<f64>,
}

impl FourierLogConductivity1D {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::Config("Fourier parameter vector must be non-empty".into()));
        }
        Ok(Self { theta })
    }

    pub fn constant(log_value: f64) -> Self {
        Self { theta: vec![log_value] }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Appends one zero coefficient (next sine, then next cosine).
    pub fn grow(&mut self) {
        self.theta.push(0.0);
    }

    pub fn log_value(&self, x: f64) -> f64 {
        self.theta
            .iter()
            .enumerate()
            .map(|(k, &t)| t * fourier_basis(k, x))
            .sum()
    }

    pub fn eval(&self, grid: &Grid1D) -> Vec<f64> {
        grid.coords().into_iter().map(|x| self.log_value(x).exp()).collect()
    }
}

/// Conductivity on the 1D grid for Fourier log-coefficients `theta`.
pub fn eval_fourier_log(theta: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    Ok(FourierLogConductivity1D::new(theta.to_vec())?.eval(grid))
}

/// One log-conductivity per node of a `J × J` grid, row-major
/// (`θ_{(i-1)J+j} = ln a(x_i, y_j)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelLogConductivity2D {
    theta: Vec<f64>,
}

impl PixelLogConductivity2D {
    pub fn new(theta: Vec<f64>, grid: &Grid2D) -> Result<Self> {
        if theta.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: theta.len(),
            });
        }
        Ok(Self { theta })
    }

    pub fn constant(log_value: f64, grid: &Grid2D) -> Self {
        Self {
            theta: vec![log_value; grid.len()],
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn eval(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t.exp()).collect()
    }
}

/// Built-in 1D test profiles (values in units of 1/100).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile1D {
    Heaviside,
    PieceLinear3S,
    PieceLinear4W,
}

impl Profile1D {
    pub const ALL: [Profile1D; 3] = [Profile1D::Heaviside, Profile1D::PieceLinear3S, Profile1D::PieceLinear4W];

    /// Closed form on `[0, 1)` with half-open pieces.
    pub fn value(&self, x: f64) -> f64 {
        let v = match self {
            Profile1D::Heaviside => {
                if x < 0.5 {
                    1.0
                } else {
                    2.0
                }
            }
            Profile1D::PieceLinear3S => {
                if x < 1.0 / 3.0 {
                    2.0 - 3.0 * x
                } else if x < 2.0 / 3.0 {
                    6.0 * x - 1.0
                } else {
                    5.0 - 3.0 * x
                }
            }
            Profile1D::PieceLinear4W => {
                if x < 0.25 {
                    2.0 - 4.0 * x
                } else if x < 0.5 {
                    8.0 * x - 1.0
                } else if x < 0.75 {
                    7.0 - 8.0 * x
                } else {
                    4.0 * x - 2.0
                }
            }
        };
        v / 100.0
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile1D::Heaviside => "heaviside",
            Profile1D::PieceLinear3S => "piecelinear3s",
            Profile1D::PieceLinear4W => "piecelinear4w",
        }
    }
}

impl fmt::Display for Profile1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile1D {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "heaviside" => Ok(Profile1D::Heaviside),
            "piecelinear3s" => Ok(Profile1D::PieceLinear3S),
            "piecelinear4w" => Ok(Profile1D::PieceLinear4W),
            _ => Err(Error::UnknownProfile(s.to_string())),
        }
    }
}

/// A strictly positive conductivity sampled on a grid (node order).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthField {
    grid: Grid,
    values: Vec<f64>,
}

impl GroundTruthField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        check_positive(&values)?;
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub(crate) fn check_positive(values: &[f64]) -> Result<()> {
    match values.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        Some(index) => Err(Error::NonPositiveConductivity {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// Samples a named built-in profile on the grid.
pub fn make_truth_1d(name: &str, grid: &Grid1D) -> Result<GroundTruthField> {
    let profile: Profile1D = name.parse()?;
    let values = grid.coords().into_iter().map(|x| profile.value(x)).collect();
    GroundTruthField::new(Grid::D1(*grid), values)
}

/// Maps a `J × J` grayscale image to conductivity `(p + 1)/100`, pixel
/// `(row i, col j)` landing on node `(x_i, y_j)`.
pub fn image_to_conductivity(img: &GrayImage) -> Result<GroundTruthField> {
    let side = img.side()?;
    let grid = Grid2D::new(side)?;
    let values = img.data().iter().map(|p| (p + 1.0) / 100.0).collect();
    GroundTruthField::new(Grid::D2(grid), values)
}
