use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Named spatially uniform heat sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Zero,
    #[serde(rename = "sin_pi_t")]
    SinPiT,
    #[serde(rename = "sin_2pi_t")]
    Sin2PiT,
}

impl SourceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SourceKind::Zero => "zero",
            SourceKind::SinPiT => "sin_pi_t",
            SourceKind::Sin2PiT => "sin_2pi_t",
        }
    }
}

impl std::str::FromStr for SourceKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "zero" | "0" => Ok(SourceKind::Zero),
            "sin_pi_t" => Ok(SourceKind::SinPiT),
            "sin_2pi_t" => Ok(SourceKind::Sin2PiT),
            _ => Err(crate::error::Error::Config(format!("unknown heat source `{s}`"))),
        }
    }
}

/// A heat source `f(t, x) = g(t)`, uniform in space by construction.
#[derive(Clone)]
pub enum HeatSource {
    Zero,
    /// `sin(πt)`
    SinPiT,
    /// `sin(2πt)`
    Sin2PiT,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl HeatSource {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        HeatSource::Custom(Arc::new(f))
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            HeatSource::Zero => 0.0,
            HeatSource::SinPiT => (PI * t).sin(),
            HeatSource::Sin2PiT => (2.0 * PI * t).sin(),
            HeatSource::Custom(f) => f(t),
        }
    }

    /// `∫₀ᵗ g(τ) dτ`; closed form for the named sources, adaptive Simpson
    /// otherwise.
    pub fn integral(&self, t: f64) -> f64 {
        match self {
            HeatSource::Zero => 0.0,
            HeatSource::SinPiT => (1.0 - (PI * t).cos()) / PI,
            HeatSource::Sin2PiT => (1.0 - (2.0 * PI * t).cos()) / (2.0 * PI),
            HeatSource::Custom(f) => simpson(&**f, 0.0, t, 1e-13, 40),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, HeatSource::Zero)
    }

    /// Always true: every variant is uniform in space.
    pub fn is_spatially_constant(&self) -> bool {
        true
    }
}

impl From<SourceKind> for HeatSource {
    fn from(k: SourceKind) -> Self {
        match k {
            SourceKind::Zero => HeatSource::Zero,
            SourceKind::SinPiT => HeatSource::SinPiT,
            SourceKind::Sin2PiT => HeatSource::Sin2PiT,
        }
    }
}

impl fmt::Debug for HeatSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeatSource::Zero => f.write_str("Zero"),
            HeatSource::SinPiT => f.write_str("SinPiT"),
            HeatSource::Sin2PiT => f.write_str("Sin2PiT"),
            HeatSource::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn rule(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = rule(f, a, fa, m, fm);
        let (rm, frm, right) = rule(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = rule(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, depth)
}
