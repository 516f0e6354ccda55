//! Uniform periodic grids on the circle `T = R/Z` and the torus `T² = R²/Z²`.
//!
//! Public node numbers are 1-based: node `j` of a 1D grid sits at
//! `x_j = (j-1)/J`, and node `(i, j)` of a 2D grid has flat number
//! `(i-1)·J + j`. Internally everything is stored 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduces a coordinate into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid rounds tiny negative inputs up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Wrap-around distance between two coordinates on the unit circle.
pub fn axis_distance(a: f64, b: f64) -> f64 {
    let d = (wrap_unit(a) - wrap_unit(b)).abs();
    d.min(1.0 - d)
}

/// A point on `T` or `T²`, coordinates reduced modulo 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TorusPoint {
    Circle(f64),
    Torus(f64, f64),
}

impl TorusPoint {
    pub fn circle(x: f64) -> Self {
        TorusPoint::Circle(wrap_unit(x))
    }

    pub fn torus(x: f64, y: f64) -> Self {
        TorusPoint::Torus(wrap_unit(x), wrap_unit(y))
    }

    pub fn x(&self) -> f64 {
        match *self {
            TorusPoint::Circle(x) | TorusPoint::Torus(x, _) => x,
        }
    }

    pub fn y(&self) -> Option<f64> {
        match *self {
            TorusPoint::Circle(_) => None,
            TorusPoint::Torus(_, y) => Some(y),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TorusPoint::Circle(_) => 1,
            TorusPoint::Torus(..) => 2,
        }
    }
}

/// Per-axis wrap distance between two points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicDistance {
    pub axes: [f64; 2],
}

impl PeriodicDistance {
    /// Sum of the per-axis distances (the step metric for sensor motion).
    pub fn manhattan(&self) -> f64 {
        self.axes[0] + self.axes[1]
    }

    /// Largest per-axis distance (grid adjacency).
    pub fn chebyshev(&self) -> f64 {
        self.axes[0].max(self.axes[1])
    }
}

/// Periodic distance between two points of the same dimension. In 1D the
/// second axis is reported as 0.
///
/// Panics if the points live on different domains.
pub fn periodic_distance(p: &TorusPoint, q: &TorusPoint) -> PeriodicDistance {
    match (*p, *q) {
        (TorusPoint::Circle(a), TorusPoint::Circle(b)) => PeriodicDistance {
            axes: [axis_distance(a, b), 0.0],
        },
        (TorusPoint::Torus(ax, ay), TorusPoint::Torus(bx, by)) => PeriodicDistance {
            axes: [axis_distance(ax, bx), axis_distance(ay, by)],
        },
        _ => panic!("periodic_distance between points of different dimension"),
    }
}

/// Nearest node on a periodic axis of `n` nodes, 0-based. Equidistant ties go
/// to the node on the left of `x` (the lower index, except across the wrap
/// where the left node is the last one).
fn snap_axis(x: f64, n: usize) -> usize {
    let x = wrap_unit(x);
    let lo = ((x * n as f64).floor() as usize).min(n - 1);
    let hi = (lo + 1) % n;
    let node = |k: usize| k as f64 / n as f64;
    let d_lo = axis_distance(x, node(lo));
    let d_hi = axis_distance(x, node(hi));
    if d_hi < d_lo {
        hi
    } else {
        lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid1D {
    nodes: usize,
}

impl Grid1D {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < 3 {
            return Err(Error::GridTooSmall(nodes));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nodes as f64
    }

    /// Coordinate of 1-based node `j`.
    pub fn coord(&self, j: usize) -> f64 {
        debug_assert!(j >= 1 && j <= self.nodes);
        (j - 1) as f64 / self.nodes as f64
    }

    /// All node coordinates in node order.
    pub fn coords(&self) -> Vec<f64> {
        (1..=self.nodes).map(|j| self.coord(j)).collect()
    }

    /// Nearest node (1-based) to `x` under the wrap-around metric.
    pub fn snap(&self, x: f64) -> usize {
        snap_axis(x, self.nodes) + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid2D {
    nodes: usize,
}

impl Grid2D {
    pub fn new(nodes_per_axis: usize) -> Result<Self> {
        if nodes_per_axis < 3 {
            return Err(Error::GridTooSmall(nodes_per_axis));
        }
        Ok(Self { nodes: nodes_per_axis })
    }

    /// Nodes per axis (`J`).
    pub fn nodes_per_axis(&self) -> usize {
        self.nodes
    }

    /// Total node count `J²`.
    pub fn len(&self) -> usize {
        self.nodes * self.nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nodes as f64
    }

    /// Coordinates of 1-based node `(i, j)`.
    pub fn coord(&self, i: usize, j: usize) -> (f64, f64) {
        let n = self.nodes as f64;
        ((i - 1) as f64 / n, (j - 1) as f64 / n)
    }

    /// Flat 1-based number of node `(i, j)`: `(i-1)·J + j`.
    pub fn flat(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.nodes + j
    }

    /// Inverse of [`Grid2D::flat`].
    pub fn unflat(&self, k: usize) -> (usize, usize) {
        ((k - 1) / self.nodes + 1, (k - 1) % self.nodes + 1)
    }

    /// Nearest node `(i, j)`, each axis snapped independently.
    pub fn snap(&self, x: f64, y: f64) -> (usize, usize) {
        (snap_axis(x, self.nodes) + 1, snap_axis(y, self.nodes) + 1)
    }
}

/// A grid of either dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grid {
    D1(Grid1D),
    D2(Grid2D),
}

impl Grid {
    pub fn dim(&self) -> usize {
        match self {
            Grid::D1(_) => 1,
            Grid::D2(_) => 2,
        }
    }

    /// Nodes per axis.
    pub fn nodes_per_axis(&self) -> usize {
        match self {
            Grid::D1(g) => g.nodes(),
            Grid::D2(g) => g.nodes_per_axis(),
        }
    }

    /// Length of a state vector.
    pub fn len(&self) -> usize {
        match self {
            Grid::D1(g) => g.nodes(),
            Grid::D2(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nodes_per_axis() as f64
    }

    /// Snaps a point to its nearest node, returned as a 1-based flat number.
    pub fn snap_to_grid(&self, p: &TorusPoint) -> Result<usize> {
        match (self, *p) {
            (Grid::D1(g), TorusPoint::Circle(x)) => Ok(g.snap(x)),
            (Grid::D2(g), TorusPoint::Torus(x, y)) => {
                let (i, j) = g.snap(x, y);
                Ok(g.flat(i, j))
            }
            _ => Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: p.dim(),
            }),
        }
    }

    /// Position of a 1-based flat node number.
    pub fn node_point(&self, k: usize) -> TorusPoint {
        match self {
            Grid::D1(g) => TorusPoint::Circle(g.coord(k)),
            Grid::D2(g) => {
                let (i, j) = g.unflat(k);
                let (x, y) = g.coord(i, j);
                TorusPoint::Torus(x, y)
            }
        }
    }
}

impl From<Grid1D> for Grid {
    fn from(g: Grid1D) -> Self {
        Grid::D1(g)
    }
}

impl From<Grid2D> for Grid {
    fn from(g: Grid2D) -> Self {
        Grid::D2(g)
    }
}
