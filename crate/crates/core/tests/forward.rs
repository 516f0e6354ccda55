use std::f64::consts::PI;

use heatinv::forward::{
    assemble_1d, dft_modes, fourier_galerkin_1d, integrate, integrate_spectral_oracle, HeatOperator, HeatSource,
};
use heatinv::grid::{Grid, Grid1D, Grid2D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2(&d) / l2(b).max(1e-300)
}

fn random_conductivity(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.005..0.05)).collect()
}

const TIMES: [f64; 6] = [0.0, 0.01, 0.1, 0.25, 0.5, 1.0];

#[test]
fn rk4_agrees_with_spectral_oracle_1d() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let j = rng.random_range(4..=32);
        let g = Grid1D::new(j).unwrap();
        let op = assemble_1d(&random_conductivity(&mut rng, j), &g).unwrap();
        let u0: Vec<f64> = (0..j).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = integrate(&op, &u0, &HeatSource::SinPiT, &TIMES).unwrap();
        let b = integrate_spectral_oracle(&op, &u0, &HeatSource::SinPiT, &TIMES).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            worst = worst.max(rel_diff(x, y));
        }
    }
    println!("worst 1D relative deviation {worst:e}");
    assert!(worst <= 1e-6);
}

#[test]
fn rk4_agrees_with_spectral_oracle_2d() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let j = rng.random_range(3..=12);
        let g = Grid2D::new(j).unwrap();
        let op = HeatOperator::new(Grid::D2(g), &random_conductivity(&mut rng, j * j)).unwrap();
        let u0: Vec<f64> = (0..j * j).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = integrate(&op, &u0, &HeatSource::Sin2PiT, &TIMES).unwrap();
        let b = integrate_spectral_oracle(&op, &u0, &HeatSource::Sin2PiT, &TIMES).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            worst = worst.max(rel_diff(x, y));
        }
    }
    println!("worst 2D relative deviation {worst:e}");
    assert!(worst <= 1e-6);
}

#[test]
fn constant_sine_mode_decays_exactly() {
    let c = 0.013;
    let g = Grid1D::new(100).unwrap();
    let dx = g.dx();
    let op = assemble_1d(&vec![c; 100], &g).unwrap();
    let u0: Vec<f64> = g.coords().iter().map(|x| (2.0 * PI * x).sin()).collect();
    let mu = 2.0 * c * ((2.0 * PI * dx).cos() - 1.0) / (dx * dx);
    let times = [0.0, 0.1, 0.5, 1.0];
    let traj = integrate(&op, &u0, &HeatSource::Zero, &times).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let want: Vec<f64> = u0.iter().map(|v| (mu * t).exp() * v).collect();
        assert!(rel_diff(&traj.states[k], &want) <= 1e-6, "t={t}");
    }
}

#[test]
fn constant_state_follows_source_integral() {
    let g = Grid1D::new(20).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let op = assemble_1d(&random_conductivity(&mut rng, 20), &g).unwrap();
    let times = [0.0, 0.3, 0.7, 1.0];
    let traj = integrate(&op, &[2.0; 20], &HeatSource::SinPiT, &times).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let want = 2.0 + (1.0 - (PI * t).cos()) / PI;
        let s = &traj.states[k];
        assert!(s.iter().all(|v| (v - s[0]).abs() < 1e-13));
        assert!((s[0] - want).abs() < 1e-10);
    }
}

#[test]
fn mean_is_conserved_and_fluctuation_decays() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let times: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    for dim in [1, 2] {
        let grid = if dim == 1 {
            Grid::D1(Grid1D::new(40).unwrap())
        } else {
            Grid::D2(Grid2D::new(10).unwrap())
        };
        let n = grid.len();
        let op = HeatOperator::new(grid, &random_conductivity(&mut rng, n)).unwrap();
        let u0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean0 = u0.iter().sum::<f64>() / n as f64;
        let traj = integrate(&op, &u0, &HeatSource::Zero, &times).unwrap();
        let mut last = f64::INFINITY;
        for s in &traj.states {
            let mean = s.iter().sum::<f64>() / n as f64;
            assert!((mean - mean0).abs() <= 1e-9);
            let fluct: Vec<f64> = s.iter().map(|v| v - mean0).collect();
            let norm = l2(&fluct);
            assert!(norm <= last * (1.0 + 1e-12));
            last = norm;
        }
    }
}

#[test]
fn solution_is_lipschitz_in_conductivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = Grid1D::new(32).unwrap();
    let a = random_conductivity(&mut rng, 32);
    let u0: Vec<f64> = g.coords().iter().map(|x| (2.0 * PI * x).sin()).collect();
    let times: Vec<f64> = (0..=50).map(|k| k as f64 / 50.0).collect();
    let base = integrate(&assemble_1d(&a, &g).unwrap(), &u0, &HeatSource::SinPiT, &times).unwrap();
    let amax = a.iter().cloned().fold(0.0, f64::max);
    let dir: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
    let dmax = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut ratios = Vec::new();
    for scale in [1e-4, 3e-4, 1e-3, 3e-3, 1e-2] {
        let b: Vec<f64> = a.iter().zip(&dir).map(|(x, d)| x + scale * amax * d / dmax).collect();
        let other = integrate(&assemble_1d(&b, &g).unwrap(), &u0, &HeatSource::SinPiT, &times).unwrap();
        let l2l2 = base
            .states
            .iter()
            .zip(&other.states)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() * g.dx())
            .sum::<f64>()
            .sqrt();
        let sup = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        ratios.push(l2l2 / sup);
    }
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo < 10.0, "{ratios:?}");
}

#[test]
fn galerkin_model_tracks_finite_differences() {
    let g = Grid1D::new(100).unwrap();
    let a: Vec<f64> = g
        .coords()
        .iter()
        .map(|x| 0.015 + 0.005 * (2.0 * PI * x).cos())
        .collect();
    let op = assemble_1d(&a, &g).unwrap();
    let u0: Vec<f64> = g.coords().iter().map(|x| (2.0 * PI * x).sin()).collect();
    let times = [0.0, 0.25, 0.5, 1.0];
    let fdm = integrate(&op, &u0, &HeatSource::SinPiT, &times).unwrap();
    let modal = fourier_galerkin_1d(&a, &dft_modes(&u0, 16), &HeatSource::SinPiT, 16, &times).unwrap();
    let phys = modal.to_physical(&g);
    for (k, t) in times.iter().enumerate().skip(1) {
        let err = rel_diff(&fdm.states[k], &phys.states[k]);
        assert!(err <= 5.0 * g.dx(), "t={t} err={err:e}");
    }
}
