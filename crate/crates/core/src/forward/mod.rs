//! Forward heat solver: operator assembly, time integration and two
//! independent oracles (eigen-decomposition and Fourier–Galerkin).

mod galerkin;
mod operator;
mod rk4;
mod source;
mod trajectory;

pub use galerkin::{dft_coefficient, dft_modes, fourier_galerkin_1d, ModalTrajectory};
pub use operator::{assemble_1d, assemble_2d, HeatOperator};
pub use rk4::{
    adjoint_conductivity_gradient, integrate, integrate_tape, integrate_with, Rk4Tape, StepControl, DEFAULT_SAFETY,
};
pub use source::{HeatSource, SourceKind};
pub use trajectory::{validate_time_grid, Trajectory, TIME_MATCH_TOL};

use crate::error::Result;
use crate::spectral::eigensystem;

/// Evaluates the variation-of-constants formula exactly through the
/// symmetric eigen-decomposition `A = Q Λ Qᵀ`. For a spatially uniform source
/// the forcing term is `1 · ∫₀ᵗ g`, since `exp(sA)·1 = 1`.
pub fn integrate_spectral_oracle(op: &HeatOperator, u0: &[f64], src: &HeatSource, times: &[f64]) -> Result<Trajectory> {
    if u0.len() != op.len() {
        return Err(crate::error::Error::DimensionMismatch {
            expected: op.len(),
            found: u0.len(),
        });
    }
    validate_time_grid(times)?;
    let es = eigensystem(op)?;
    let states = times
        .iter()
        .map(|&t| {
            let forcing = src.integral(t);
            es.propagate(u0, t).into_iter().map(|v| v + forcing).collect()
        })
        .collect();
    Ok(Trajectory {
        times: times.to_vec(),
        states,
    })
}
