//! Independent reference computations for the acceptance suite. Nothing here
//! calls into the solver, the adjoint or the spectral module.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Dense 1D operator written out row by row:
/// `(a_j (u_{j+1} - u_j) - a_{j-1} (u_j - u_{j-1})) / Δx²` with periodic wrap.
pub fn stencil_1d(a: &[f64]) -> DMatrix<f64> {
    let n = a.len();
    let s = (n * n) as f64;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let (left, right) = ((j + n - 1) % n, (j + 1) % n);
        m[(j, right)] += a[j] * s;
        m[(j, left)] += a[left] * s;
        m[(j, j)] -= (a[j] + a[left]) * s;
    }
    m
}

/// Dense five-point operator on a row-major `J × J` grid; node `(i, j)`
/// carries the conductivity of its links towards `i + 1` and `j + 1`.
pub fn stencil_2d(a: &[f64], side: usize) -> DMatrix<f64> {
    let n = side * side;
    let s = (side * side) as f64;
    let idx = |i: usize, j: usize| (i % side) * side + (j % side);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..side {
        for j in 0..side {
            let k = idx(i, j);
            let up = idx(i + side - 1, j);
            let left = idx(i, j + side - 1);
            let neighbours = [
                (idx(i + 1, j), a[k]),
                (idx(i, j + 1), a[k]),
                (up, a[up]),
                (left, a[left]),
            ];
            for (q, w) in neighbours {
                m[(k, q)] += w * s;
                m[(k, k)] -= w * s;
            }
        }
    }
    m
}

/// Decay rate of `sin(2πx)` under the constant-`c` periodic Laplacian.
pub fn sine_mode_rate(c: f64, nodes: usize) -> f64 {
    let dx = 1.0 / nodes as f64;
    2.0 * c * ((2.0 * PI * dx).cos() - 1.0) / (dx * dx)
}

/// `∫₀ᵗ sin(ω s) ds`.
pub fn sine_integral(omega: f64, t: f64) -> f64 {
    (1.0 - (omega * t).cos()) / omega
}

pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(m.clone());
    (e.eigenvalues.as_slice().to_vec(), e.eigenvectors)
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.max()
}

/// `exp(tM) u0 + forcing · 1` through the eigen-decomposition of symmetric `M`.
pub fn duhamel(m: &DMatrix<f64>, u0: &[f64], t: f64, forcing: f64) -> Vec<f64> {
    let (lam, q) = symmetric_eigen(m);
    let c = q.tr_mul(&DVector::from_column_slice(u0));
    let scaled = DVector::from_iterator(lam.len(), lam.iter().zip(c.iter()).map(|(l, c)| (l * t).exp() * c));
    (q * scaled).iter().map(|v| v + forcing).collect()
}

/// Central differences `(f(θ + h e_k) - f(θ - h e_k)) / 2h`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|k| {
            let mut p = theta.to_vec();
            let mut m = theta.to_vec();
            p[k] += h;
            m[k] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

/// Maximiser of `t · exp(λ t)` for `λ < 0`.
pub fn sensitivity_peak(lambda: f64) -> f64 {
    -1.0 / lambda
}

pub fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2(&d) / l2(b)
}
