//! Sensitivity diagnostics from the eigen-decomposition of the heat operator.
//!
//! Eigenvalues here are those of `A` itself, so they already carry the
//! `1/Δx²` factor; a measurement's sensitivity to mode `k` behaves like
//! `t·exp(λ_k t)` and peaks at `t* = -1/λ_k`.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::exec;
use crate::forward::{HeatOperator, HeatSource};

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// (columns of `vectors`). The last pair is the null mode `λ = 0`,
/// `v = 1/√n`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub lambdas: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn eigensystem(op: &HeatOperator) -> Result<EigenSystem> {
    eigensystem_dense(&op.to_dense())
}

pub fn eigensystem_dense(m: &DMatrix<f64>) -> Result<EigenSystem> {
    let scale = m.abs().max().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-12 * scale {
        return Err(Error::AsymmetricOperator(asym));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lambdas = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenSystem { lambdas, vectors })
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `exp(tA) u0`.
    pub fn propagate(&self, u0: &[f64], t: f64) -> Vec<f64> {
        self.propagate_modes(u0, t, self.len())
    }

    /// `Σ_{j < count} exp(λ_j t) v_j v_jᵀ u0` over the first `count` modes.
    fn propagate_modes(&self, u0: &[f64], t: f64, count: usize) -> Vec<f64> {
        let u = DVector::from_column_slice(u0);
        let proj = self.vectors.tr_mul(&u);
        let mut out = DVector::zeros(self.len());
        for j in 0..count {
            out.axpy((self.lambdas[j] * t).exp() * proj[j], &self.vectors.column(j), 1.0);
        }
        out.as_slice().to_vec()
    }

    /// `‖Q Λ Qᵀ - A‖_F / ‖A‖_F`.
    pub fn reconstruction_error(&self, a: &DMatrix<f64>) -> f64 {
        let lam = DMatrix::from_diagonal(&DVector::from_vec(self.lambdas.clone()));
        let rec = &self.vectors * lam * self.vectors.transpose();
        (rec - a).norm() / a.norm()
    }
}

/// `|∂u(t, node)/∂λ_k|` sampled over a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCurve {
    pub mode: usize,
    pub samples: Vec<(f64, f64)>,
}

impl SensitivityCurve {
    /// Sample time with the largest value.
    pub fn argmax(&self) -> f64 {
        self.samples
            .iter()
            .fold(
                (0.0, f64::NEG_INFINITY),
                |best, &(t, v)| if v > best.1 { (t, v) } else { best },
            )
            .0
    }
}

/// Sensitivity of the reading at 1-based `node` to the 1-based mode `k`
/// (ascending eigenvalue order): `|t · exp(t λ_k) · (e_nodeᵀ v_k)(v_kᵀ u0)|`.
/// The null mode `k = n` yields an all-zero curve.
pub fn sensitivity_curve(
    es: &EigenSystem,
    k: usize,
    u0: &[f64],
    node: usize,
    times: &[f64],
) -> Result<SensitivityCurve> {
    let n = es.len();
    if k == 0 || k > n {
        return Err(Error::Config(format!("mode index {k} outside 1..={n}")));
    }
    if node == 0 || node > n {
        return Err(Error::Config(format!("node {node} outside 1..={n}")));
    }
    if u0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u0.len(),
        });
    }
    if k == n {
        return Ok(SensitivityCurve {
            mode: k,
            samples: times.iter().map(|&t| (t, 0.0)).collect(),
        });
    }
    let v = es.vectors.column(k - 1);
    let coupling = v[node - 1] * v.dot(&DVector::from_column_slice(u0));
    let lam = es.lambdas[k - 1];
    Ok(SensitivityCurve {
        mode: k,
        samples: times
            .iter()
            .map(|&t| (t, (t * (lam * t).exp() * coupling).abs()))
            .collect(),
    })
}

/// Peak time `-1/λ` of `t·exp(λt)` (infinite for the null mode).
pub fn peak_time(lambda: f64) -> f64 {
    if lambda < 0.0 {
        -1.0 / lambda
    } else {
        f64::INFINITY
    }
}

/// Reported high-sensitivity window `[0.05 t*, 3 t*]`.
pub fn sensitivity_window(lambda: f64) -> (f64, f64) {
    let t = peak_time(lambda);
    (0.05 * t, 3.0 * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recoverability {
    Recoverable,
    /// Constant initial data under a spatially uniform source: the solution
    /// carries no information about the conductivity.
    Degenerate,
}

/// Screens an experiment configuration for the degenerate case.
pub fn check_recoverable(u0: &[f64], source: &HeatSource) -> Recoverability {
    check_recoverable_with(u0, source.is_spatially_constant())
}

pub fn check_recoverable_with(u0: &[f64], source_spatially_constant: bool) -> Recoverability {
    let (lo, hi) = u0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if source_spatially_constant && hi - lo < 1e-12 {
        Recoverability::Degenerate
    } else {
        Recoverability::Recoverable
    }
}

/// Split of the state at time `t` into the conserved mean, the accumulated
/// uniform forcing and the decaying transient.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumDecomposition {
    pub mean: f64,
    pub forcing: f64,
    pub transient: Vec<f64>,
}

impl EquilibriumDecomposition {
    pub fn total(&self) -> Vec<f64> {
        self.transient.iter().map(|v| v + self.mean + self.forcing).collect()
    }
}

pub fn equilibrium_decomposition(
    es: &EigenSystem,
    u0: &[f64],
    source: &HeatSource,
    t: f64,
) -> Result<EquilibriumDecomposition> {
    if !source.is_spatially_constant() {
        return Err(Error::NotSpatiallyConstant);
    }
    if u0.len() != es.len() {
        return Err(Error::DimensionMismatch {
            expected: es.len(),
            found: u0.len(),
        });
    }
    Ok(EquilibriumDecomposition {
        mean: u0.iter().sum::<f64>() / u0.len() as f64,
        forcing: source.integral(t),
        transient: es.propagate_modes(u0, t, es.len() - 1),
    })
}

/// One line of the sensitivity report.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    /// 1-based mode index in ascending eigenvalue order.
    pub k: usize,
    pub lambda: f64,
    pub t_star: f64,
    pub window: (f64, f64),
}

impl SensitivityRow {
    pub fn is_null(&self) -> bool {
        self.t_star.is_infinite()
    }
}

/// The null mode followed by the `modes` slowest decaying modes (all of them
/// when `None`).
pub fn sensitivity_report(es: &EigenSystem, modes: Option<usize>) -> Vec<SensitivityRow> {
    let n = es.len();
    let take = modes.unwrap_or(n - 1).min(n - 1);
    let ks: Vec<usize> = (0..=take).map(|i| n - i).collect();
    exec::map(&ks, |&k| {
        let lambda = if k == n { 0.0 } else { es.lambdas[k - 1] };
        SensitivityRow {
            k,
            lambda,
            t_star: peak_time(lambda),
            window: sensitivity_window(lambda),
        }
    })
}

pub fn write_sensitivity_csv<W: Write>(rows: &[SensitivityRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "k,lambda_k,t_star,window_lo,window_hi")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.k, r.lambda, r.t_star, r.window.0, r.window.1)?;
    }
    Ok(())
}
