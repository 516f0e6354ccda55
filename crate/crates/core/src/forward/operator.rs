use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::check_positive;
use crate::grid::{Grid, Grid1D, Grid2D};

/// One flux link between neighbouring nodes `p` and `q` whose conductance is
/// `a[coeff] / Δx²`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Link {
    p: usize,
    q: usize,
    coeff: usize,
    weight: f64,
}

/// The semi-discrete operator `A(a)` of `∂·(a ∂u)` on a periodic grid.
///
/// Stored as a list of symmetric links so that `A = Aᵀ` and `A·1 = 0` hold by
/// construction: every link adds `w (u_q - u_p)` to row `p` and the negation
/// to row `q`. In 1D link `j` joins nodes `j` and `j+1` with conductivity
/// `a_j`; in 2D node `(i, j)` owns the links to `(i+1, j)` and `(i, j+1)`.
#[derive(Debug, Clone)]
pub struct HeatOperator {
    grid: Grid,
    conductivity: Vec<f64>,
    links: Vec<Link>,
}

impl HeatOperator {
    pub fn new(grid: Grid, a: &[f64]) -> Result<Self> {
        match grid {
            Grid::D1(g) => assemble_1d(a, &g),
            Grid::D2(g) => assemble_2d(a, &g),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx()
    }

    /// Size of the state vector.
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn conductivity(&self) -> &[f64] {
        &self.conductivity
    }

    pub fn max_conductivity(&self) -> f64 {
        self.conductivity.iter().cloned().fold(0.0, f64::max)
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.len());
        debug_assert_eq!(y.len(), self.len());
        y.iter_mut().for_each(|v| *v = 0.0);
        for l in &self.links {
            let flux = l.weight * (x[l.q] - x[l.p]);
            y[l.p] += flux;
            y[l.q] -= flux;
        }
    }

    /// Accumulates `∂(wᵀ A(a) y)/∂a` into `grad`.
    pub fn accumulate_conductivity_gradient(&self, w: &[f64], y: &[f64], grad: &mut [f64]) {
        let inv_dx2 = 1.0 / (self.dx() * self.dx());
        for l in &self.links {
            grad[l.coeff] -= (w[l.q] - w[l.p]) * (y[l.q] - y[l.p]) * inv_dx2;
        }
    }

    /// Entry `(row, col)`, 0-based.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let mut v = 0.0;
        for l in &self.links {
            if row == col && (l.p == row || l.q == row) {
                v -= l.weight;
            } else if (l.p == row && l.q == col) || (l.q == row && l.p == col) {
                v += l.weight;
            }
        }
        v
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for l in &self.links {
            m[(l.p, l.q)] += l.weight;
            m[(l.q, l.p)] += l.weight;
            m[(l.p, l.p)] -= l.weight;
            m[(l.q, l.q)] -= l.weight;
        }
        m
    }

    /// Reference explicit step `Δx² / (4d · max a)` in `d` dimensions, so that
    /// `h · ρ(A) ≤ 1` (`Δx² / (4 · max a)` in 1D).
    pub fn stable_step(&self) -> f64 {
        let d = self.grid.dim() as f64;
        self.dx() * self.dx() / (4.0 * d * self.max_conductivity())
    }
}

/// Assembles the 1D operator: row `j` is
/// `[a_j u_{j+1} - (a_j + a_{j-1}) u_j + a_{j-1} u_{j-1}] / Δx²`.
pub fn assemble_1d(a: &[f64], grid: &Grid1D) -> Result<HeatOperator> {
    let n = grid.nodes();
    check_len(a, n)?;
    check_positive(a)?;
    let inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    let links = (0..n)
        .map(|j| Link {
            p: j,
            q: (j + 1) % n,
            coeff: j,
            weight: a[j] * inv_dx2,
        })
        .collect();
    Ok(HeatOperator {
        grid: Grid::D1(*grid),
        conductivity: a.to_vec(),
        links,
    })
}

/// Assembles the 2D five-point operator on a row-major `J × J` state.
pub fn assemble_2d(a: &[f64], grid: &Grid2D) -> Result<HeatOperator> {
    let n = grid.nodes_per_axis();
    check_len(a, n * n)?;
    check_positive(a)?;
    let inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    let mut links = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            let weight = a[k] * inv_dx2;
            links.push(Link {
                p: k,
                q: ((i + 1) % n) * n + j,
                coeff: k,
                weight,
            });
            links.push(Link {
                p: k,
                q: i * n + (j + 1) % n,
                coeff: k,
                weight,
            });
        }
    }
    Ok(HeatOperator {
        grid: Grid::D2(*grid),
        conductivity: a.to_vec(),
        links,
    })
}

fn check_len(a: &[f64], n: usize) -> Result<()> {
    if a.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.len(),
        });
    }
    Ok(())
}
