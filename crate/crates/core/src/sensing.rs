//! Sensor trajectories and synthetic temperature measurements.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::Trajectory;
use crate::grid::{Grid, TorusPoint};

/// Measurement times `t_m = m·T/M` for `m = 1..=M`.
pub fn measurement_times(count: usize, t_final: f64) -> Vec<f64> {
    (1..=count).map(|m| m as f64 / count as f64 * t_final).collect()
}

/// Positions of one sensor at the shared measurement times.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorPath {
    pub sensor_id: usize,
    pub times: Vec<f64>,
    pub positions: Vec<TorusPoint>,
}

/// One sensor circling `T` once at constant speed by `t_final`.
pub fn path_circle_1d(count: usize, t_final: f64) -> SensorPath {
    let times = measurement_times(count, t_final);
    let positions = times.iter().map(|t| TorusPoint::circle(t / t_final)).collect();
    SensorPath {
        sensor_id: 1,
        times,
        positions,
    }
}

/// Point at arc length fraction `s ∈ [0, 1)` along the square orbit of
/// half-side `h` centred at `(1/2, 1/2)`, starting at the top-left corner and
/// running counter-clockwise (down the left edge first).
pub fn square_orbit_point(h: f64, s: f64) -> TorusPoint {
    let side = 2.0 * h;
    let (lo, hi) = (0.5 - h, 0.5 + h);
    let arc = s * 4.0;
    let edge = (arc.floor() as usize).min(3);
    let along = (arc - edge as f64) * side;
    match edge {
        0 => TorusPoint::torus(lo, hi - along),
        1 => TorusPoint::torus(lo + along, lo),
        2 => TorusPoint::torus(hi, lo + along),
        _ => TorusPoint::torus(hi - along, hi),
    }
}

/// Half-side and cycle count of orbit `k` (1 = innermost).
pub fn orbit_geometry(k: usize) -> (f64, u32) {
    (k as f64 / 10.0, 1u32 << (4 - k))
}

/// The four moving sensors on concentric squares of sides 1/5..4/5, sensor
/// `k` completing `2^(4-k)` laps by `t_final`.
pub fn path_orbits_2d(count: usize, t_final: f64) -> Vec<SensorPath> {
    let times = measurement_times(count, t_final);
    (1..=4)
        .map(|k| {
            let (h, laps) = orbit_geometry(k);
            let positions = times
                .iter()
                .map(|t| square_orbit_point(h, (laps as f64 * t / t_final).fract()))
                .collect();
            SensorPath {
                sensor_id: k,
                times: times.clone(),
                positions,
            }
        })
        .collect()
}

/// `sensors` static sensors on the lattice `((i-1)/r, (j-1)/r)`, `r = √sensors`.
pub fn path_static_grid_2d(sensors: usize, count: usize, t_final: f64, grid: &Grid) -> Result<Vec<SensorPath>> {
    let r = (sensors as f64).sqrt().round() as usize;
    let j = grid.nodes_per_axis();
    if r * r != sensors || r == 0 || !j.is_multiple_of(r) || grid.dim() != 2 {
        return Err(Error::StaticLatticeMismatch { sensors, nodes: j });
    }
    let times = measurement_times(count, t_final);
    let mut paths = Vec::with_capacity(sensors);
    for i in 0..r {
        for jj in 0..r {
            let p = TorusPoint::torus(i as f64 / r as f64, jj as f64 / r as f64);
            paths.push(SensorPath {
                sensor_id: i * r + jj + 1,
                times: times.clone(),
                positions: vec![p; count],
            });
        }
    }
    Ok(paths)
}

/// Named sensor layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorConfig {
    Circle1d,
    Orbits4,
    Static16,
    Static64,
}

impl SensorConfig {
    pub fn dim(&self) -> usize {
        match self {
            SensorConfig::Circle1d => 1,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SensorConfig::Circle1d => "circle",
            SensorConfig::Orbits4 => "orbits4",
            SensorConfig::Static16 => "static16",
            SensorConfig::Static64 => "static64",
        }
    }

    pub fn paths(&self, grid: &Grid, count: usize, t_final: f64) -> Result<Vec<SensorPath>> {
        if grid.dim() != self.dim() {
            return Err(Error::Config(format!(
                "sensor layout `{}` needs a {}D grid",
                self.name(),
                self.dim()
            )));
        }
        match self {
            SensorConfig::Circle1d => Ok(vec![path_circle_1d(count, t_final)]),
            SensorConfig::Orbits4 => Ok(path_orbits_2d(count, t_final)),
            SensorConfig::Static16 => path_static_grid_2d(16, count, t_final, grid),
            SensorConfig::Static64 => path_static_grid_2d(64, count, t_final, grid),
        }
    }
}

impl fmt::Display for SensorConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SensorConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "circle" | "circle1d" => Ok(SensorConfig::Circle1d),
            "orbits4" | "orbits" => Ok(SensorConfig::Orbits4),
            "static16" => Ok(SensorConfig::Static16),
            "static64" => Ok(SensorConfig::Static64),
            _ => Err(Error::Config(format!("unknown sensor layout `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub sensor_id: usize,
    pub t: f64,
    pub position: TorusPoint,
    /// 1-based flat node number the position snaps to.
    pub node: usize,
    pub temperature: f64,
}

/// Time-stamped readings of synchronised sensors, ordered by time then
/// sensor id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementSet {
    pub records: Vec<MeasurementRecord>,
}

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct measurement times in ascending order.
    pub fn times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.records.iter().map(|r| r.t).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() <= crate::forward::TIME_MATCH_TOL);
        ts
    }

    pub fn sensor_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.records.iter().map(|r| r.sensor_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Records of one sensor in time order.
    pub fn sensor(&self, id: usize) -> Vec<&MeasurementRecord> {
        self.records.iter().filter(|r| r.sensor_id == id).collect()
    }

    pub fn temperatures(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.temperature).collect()
    }

    /// Checks that every sensor reports at the same strictly increasing times.
    pub fn validate(&self) -> Result<()> {
        let mut per: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in &self.records {
            per.entry(r.sensor_id).or_default().push(r.t);
        }
        let mut reference: Option<&Vec<f64>> = None;
        for ts in per.values() {
            if ts.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::NonMonotoneTimes);
            }
            match reference {
                None => reference = Some(ts),
                Some(r) if r != ts => {
                    return Err(Error::Config("sensors are not synchronised".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sensor_id,t,x,y,node,temperature")?;
        for r in &self.records {
            let y = r.position.y().map(|y| y.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.sensor_id,
                r.t,
                r.position.x(),
                y,
                r.node,
                r.temperature
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut records = Vec::new();
        let mut lines = r.lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| Error::parse("measurement csv", e))?
            .unwrap_or_default();
        if header.replace(' ', "") != "sensor_id,t,x,y,node,temperature" {
            return Err(Error::parse("measurement csv", format!("unexpected header `{header}`")));
        }
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::parse("measurement csv", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |e: &dyn fmt::Display| Error::parse(format!("measurement csv line {}", n + 2), e);
            if f.len() != 6 {
                return Err(bad(&"expected 6 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(&e));
            let int = |s: &str| s.parse::<usize>().map_err(|e| bad(&e));
            let position = if f[3].is_empty() {
                TorusPoint::circle(num(f[2])?)
            } else {
                TorusPoint::torus(num(f[2])?, num(f[3])?)
            };
            records.push(MeasurementRecord {
                sensor_id: int(f[0])?,
                t: num(f[1])?,
                position,
                node: int(f[4])?,
                temperature: num(f[5])?,
            });
        }
        Ok(Self { records })
    }
}

/// Reads sensor values off a trajectory: the state at the snapped node, plus
/// independent `N(0, noise_sd²)` noise when `noise_sd > 0` (seeded).
pub fn measure(
    traj: &Trajectory,
    paths: &[SensorPath],
    grid: &Grid,
    noise_sd: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    if !(noise_sd >= 0.0) {
        return Err(Error::Config(format!(
            "noise standard deviation {noise_sd} must be >= 0"
        )));
    }
    let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times = paths.first().map(|p| p.times.clone()).unwrap_or_default();
    let mut records = Vec::with_capacity(times.len() * paths.len());
    for (m, &t) in times.iter().enumerate() {
        let state = traj.state_at(t)?;
        for p in paths {
            let position = p.positions[m];
            let node = grid.snap_to_grid(&position)?;
            let mut temperature = state[node - 1];
            if noise_sd > 0.0 {
                temperature += noise.sample(&mut rng);
            }
            records.push(MeasurementRecord {
                sensor_id: p.sensor_id,
                t,
                position,
                node,
                temperature,
            });
        }
    }
    Ok(MeasurementSet { records })
}
