use std::io::Write;

use crate::error::{Error, Result};

/// States of the semi-discrete system at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// Absolute tolerance when matching requested times against stored ones.
pub const TIME_MATCH_TOL: f64 = 1e-12;

impl Trajectory {
    /// Index of the stored time equal to `t` (within [`TIME_MATCH_TOL`]).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = self.times.partition_point(|&s| s < t - TIME_MATCH_TOL);
        (k < self.times.len() && (self.times[k] - t).abs() <= TIME_MATCH_TOL).then_some(k)
    }

    pub fn state_at(&self, t: f64) -> Result<&[f64]> {
        self.index_of(t)
            .map(|k| self.states[k].as_slice())
            .ok_or(Error::MissingMeasurementTime(t))
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Writes `t,u_1,...,u_n` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.states.first().map(Vec::len).unwrap_or(0);
        write!(w, "t")?;
        for j in 1..=n {
            write!(w, ",u_{j}")?;
        }
        writeln!(w)?;
        for (t, u) in self.times.iter().zip(&self.states) {
            write!(w, "{t}")?;
            for v in u {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Checks that a time grid starts at 0 and increases strictly.
pub fn validate_time_grid(times: &[f64]) -> Result<()> {
    if times.first() != Some(&0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotoneTimes);
    }
    Ok(())
}
