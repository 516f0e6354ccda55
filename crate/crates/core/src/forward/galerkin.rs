//! Truncated Fourier–Galerkin model of the 1D problem,
//! `û̇ = -4π² D â(Z) D û + f̂`, used as an independent oracle for the
//! finite-difference solver.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::source::HeatSource;
use crate::forward::trajectory::{validate_time_grid, Trajectory};
use crate::grid::Grid1D;

/// Discrete Fourier coefficient `(1/J) Σ_j s_j e^{-2πi k x_j}` of grid samples.
pub fn dft_coefficient(samples: &[f64], k: i64) -> Complex64 {
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(j, &s)| s * Complex64::from_polar(1.0, -2.0 * PI * k as f64 * j as f64 / n))
        .sum::<Complex64>()
        / n
}

/// Coefficients `û_{-n..=n}` of grid samples.
pub fn dft_modes(samples: &[f64], n_modes: usize) -> Vec<Complex64> {
    let n = n_modes as i64;
    (-n..=n).map(|k| dft_coefficient(samples, k)).collect()
}

/// Mode-space trajectory; `coeffs[t][n_modes + k]` is `û_k(t)`.
#[derive(Debug, Clone)]
pub struct ModalTrajectory {
    pub n_modes: usize,
    pub times: Vec<f64>,
    pub coeffs: Vec<Vec<Complex64>>,
}

impl ModalTrajectory {
    pub fn mode(&self, step: usize, k: i64) -> Complex64 {
        self.coeffs[step][(self.n_modes as i64 + k) as usize]
    }

    /// Synthesises `u(x_j) = Re Σ_k û_k e^{2πi k x_j}` on the grid.
    pub fn to_physical(&self, grid: &Grid1D) -> Trajectory {
        let n = self.n_modes as i64;
        let xs = grid.coords();
        let states = self
            .coeffs
            .iter()
            .map(|c| {
                xs.iter()
                    .map(|&x| {
                        (-n..=n)
                            .map(|k| c[(n + k) as usize] * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x))
                            .sum::<Complex64>()
                            .re
                    })
                    .collect()
            })
            .collect();
        Trajectory {
            times: self.times.clone(),
            states,
        }
    }
}

/// Integrates the Galerkin system for modes `-n_modes..=n_modes`, with `â`
/// taken from the grid samples `a`.
pub fn fourier_galerkin_1d(
    a: &[f64],
    u0_hat: &[Complex64],
    src: &HeatSource,
    n_modes: usize,
    times: &[f64],
) -> Result<ModalTrajectory> {
    if n_modes == 0 || 2 * n_modes + 1 > a.len() {
        return Err(Error::TooManyModes {
            n_modes,
            nodes: a.len(),
        });
    }
    let size = 2 * n_modes + 1;
    if u0_hat.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            found: u0_hat.len(),
        });
    }
    validate_time_grid(times)?;

    let n = n_modes as i64;
    let a_hat: Vec<Complex64> = (-2 * n..=2 * n).map(|k| dft_coefficient(a, k)).collect();
    let mut g = vec![Complex64::new(0.0, 0.0); size * size];
    for (r, kr) in (-n..=n).enumerate() {
        for (c, kc) in (-n..=n).enumerate() {
            let ah = a_hat[(kr - kc + 2 * n) as usize];
            g[r * size + c] = -4.0 * PI * PI * (kr * kc) as f64 * ah;
        }
    }
    let rho = (0..size)
        .map(|r| g[r * size..(r + 1) * size].iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let h_max = if rho > 0.0 { 0.02 / rho } else { f64::INFINITY };

    let rhs = |t: f64, y: &[Complex64], out: &mut [Complex64]| {
        for r in 0..size {
            out[r] = g[r * size..(r + 1) * size].iter().zip(y).map(|(a, b)| a * b).sum();
        }
        out[n_modes] += src.value(t);
    };

    let zero = Complex64::new(0.0, 0.0);
    let mut u = u0_hat.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut y) = (
        vec![zero; size],
        vec![zero; size],
        vec![zero; size],
        vec![zero; size],
        vec![zero; size],
    );
    let mut coeffs = vec![u.clone()];
    for w in times.windows(2) {
        let steps = ((w[1] - w[0]) / h_max).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / steps as f64;
        for s in 0..steps {
            let t = w[0] + s as f64 * h;
            rhs(t, &u, &mut k1);
            (0..size).for_each(|i| y[i] = u[i] + 0.5 * h * k1[i]);
            rhs(t + 0.5 * h, &y, &mut k2);
            (0..size).for_each(|i| y[i] = u[i] + 0.5 * h * k2[i]);
            rhs(t + 0.5 * h, &y, &mut k3);
            (0..size).for_each(|i| y[i] = u[i] + h * k3[i]);
            rhs(t + h, &y, &mut k4);
            (0..size).for_each(|i| u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        }
        coeffs.push(u.clone());
    }
    Ok(ModalTrajectory {
        n_modes,
        times: times.to_vec(),
        coeffs,
    })
}
