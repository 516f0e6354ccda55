use heatinv::forward::{integrate, HeatOperator, HeatSource};
use heatinv::grid::{periodic_distance, Grid, Grid1D, Grid2D, TorusPoint};
use heatinv::sensing::{measure, measurement_times, path_circle_1d, path_orbits_2d, path_static_grid_2d, SensorConfig};

fn snapped_points(grid: &Grid, paths: &[heatinv::sensing::SensorPath]) -> Vec<TorusPoint> {
    paths
        .iter()
        .flat_map(|p| p.positions.iter())
        .map(|q| grid.node_point(grid.snap_to_grid(q).unwrap()))
        .collect()
}

#[test]
fn orbits_sweep_the_band_between_the_squares() {
    let g = Grid2D::new(32).unwrap();
    let dx = g.dx();
    let grid = Grid::D2(g);
    let snapped = snapped_points(&grid, &path_orbits_2d(256, 1.0));
    let centre = TorusPoint::torus(0.5, 0.5);
    let mut worst = 0.0f64;
    for k in 1..=g.len() {
        let node = grid.node_point(k);
        let d = snapped
            .iter()
            .map(|s| periodic_distance(&node, s).chebyshev())
            .fold(f64::INFINITY, f64::min);
        let ring = periodic_distance(&node, &centre).chebyshev();
        if (0.1..=0.4).contains(&ring) {
            assert!(d <= 2.0 * dx + 1e-12, "node {k} at {d}");
        }
        worst = worst.max(d);
    }
    // the centre patch inside the innermost square and the patch around the
    // torus corner outside the outermost one are 0.1 away from every orbit
    assert!((worst - 3.0 * dx).abs() < 1e-12);
}

#[test]
fn snapped_orbit_steps_move_at_most_one_node() {
    let g = Grid2D::new(32).unwrap();
    let grid = Grid::D2(g);
    for p in path_orbits_2d(256, 1.0) {
        let pts: Vec<TorusPoint> = p
            .positions
            .iter()
            .map(|q| grid.node_point(grid.snap_to_grid(q).unwrap()))
            .collect();
        for w in pts.windows(2) {
            assert!(periodic_distance(&w[0], &w[1]).manhattan() <= g.dx() + 1e-12);
        }
    }
}

#[test]
fn static_layouts_are_time_invariant_and_on_the_lattice() {
    let grid = Grid::D2(Grid2D::new(32).unwrap());
    for (k, layout) in [(16, SensorConfig::Static16), (64, SensorConfig::Static64)] {
        let paths = layout.paths(&grid, 50, 1.0).unwrap();
        assert_eq!(paths.len(), k);
        let direct = path_static_grid_2d(k, 50, 1.0, &grid).unwrap();
        assert_eq!(paths, direct);
        for p in &paths {
            let node = grid.snap_to_grid(&p.positions[0]).unwrap();
            assert!(p.positions.iter().all(|q| grid.snap_to_grid(q).unwrap() == node));
        }
    }
}

#[test]
fn constant_state_yields_constant_readings() {
    let g = Grid::D2(Grid2D::new(8).unwrap());
    let op = HeatOperator::new(g, &[0.02; 64]).unwrap();
    let mut times = vec![0.0];
    times.extend(measurement_times(16, 1.0));
    let traj = integrate(&op, &[0.7; 64], &HeatSource::Zero, &times).unwrap();
    let m = measure(&traj, &path_orbits_2d(16, 1.0), &g, 0.0, 0).unwrap();
    assert_eq!(m.len(), 64);
    assert!(m.temperatures().iter().all(|&v| (v - 0.7).abs() < 1e-14));
}

#[test]
fn noise_is_seeded_and_has_the_requested_scale() {
    let g = Grid::D1(Grid1D::new(50).unwrap());
    let op = HeatOperator::new(g, &[0.01; 50]).unwrap();
    let mut times = vec![0.0];
    times.extend(measurement_times(2000, 1.0));
    let traj = integrate(&op, &[0.0; 50], &HeatSource::Zero, &times).unwrap();
    let path = [path_circle_1d(2000, 1.0)];
    let a = measure(&traj, &path, &g, 1e-3, 9).unwrap();
    assert_eq!(a, measure(&traj, &path, &g, 1e-3, 9).unwrap());
    assert_ne!(a, measure(&traj, &path, &g, 1e-3, 10).unwrap());
    let t = a.temperatures();
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    let sd = (t.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t.len() - 1) as f64).sqrt();
    assert!(mean.abs() < 1e-4);
    assert!((sd - 1e-3).abs() < 1e-4);
}
