use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use heatinv::field::Profile1D;
use heatinv::pipeline::{ExperimentSpec, TruthSource};
use serde_json::Value;

use crate::args::{ExperimentArgs, ProblemArgs};

pub const DEFAULT_OUT: &str = "heatinv-out";

pub fn out_dir(p: &ProblemArgs) -> PathBuf {
    p.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn read_config(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    if !v.is_object() {
        bail!(heatinv::Error::Config(format!(
            "{}: expected a JSON object",
            path.display()
        )));
    }
    Ok(v)
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if k == "gd" => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn config_error(msg: String) -> anyhow::Error {
    heatinv::Error::Config(msg).into()
}

/// Defaults for the chosen dimension, then the config file, then the flags.
pub fn problem_spec(p: &ProblemArgs) -> Result<ExperimentSpec> {
    let file = p.config.as_deref().map(read_config).transpose()?;
    let dim = match (p.dim, file.as_ref().and_then(|f| f.get("dimension"))) {
        (Some(d), _) => d,
        (None, Some(v)) => {
            v.as_u64()
                .ok_or_else(|| config_error(format!("`dimension` must be 1 or 2, got {v}")))? as usize
        }
        (None, None) if p.image.is_some() => 2,
        (None, None) => 1,
    };
    let base = match dim {
        1 => ExperimentSpec::default_1d(Profile1D::Heaviside),
        2 => ExperimentSpec::default_2d(""),
        d => return Err(config_error(format!("dimension must be 1 or 2, got {d}"))),
    };
    let mut spec = match file {
        Some(f) => {
            let mut v = serde_json::to_value(&base)?;
            merge(&mut v, f);
            serde_json::from_value::<ExperimentSpec>(v).map_err(|e| config_error(format!("config file: {e}")))?
        }
        None => base,
    };
    spec.dimension = dim;
    if let Some(name) = &p.truth {
        spec.truth = TruthSource::Builtin(name.parse()?);
    }
    if let Some(img) = &p.image {
        spec.truth = TruthSource::Image(img.clone());
    }
    if let Some(j) = p.grid_size {
        spec.grid_size = j;
    }
    if let Some(u0) = &p.u0 {
        spec.initial_condition = u0.parse()?;
    }
    if let Some(s) = &p.source {
        spec.source = s.parse()?;
    }
    if let Some(t) = p.t_final {
        spec.t_final = t;
    }
    if let Some(s) = p.step_safety {
        spec.step_safety = s;
    }
    if matches!(&spec.truth, TruthSource::Image(path) if path.as_os_str().is_empty()) {
        return Err(config_error("2D runs need a truth image (--image)".into()));
    }
    Ok(spec)
}

pub fn experiment_spec(a: &ExperimentArgs) -> Result<ExperimentSpec> {
    let mut spec = problem_spec(&a.problem)?;
    if let Some(s) = &a.sensors {
        spec.sensors = s.parse()?;
    }
    if let Some(m) = a.measurements {
        spec.measurements = m;
    }
    if let Some(e) = a.epochs {
        spec.gd.max_epoch = e;
    }
    if let Some(n) = a.modes {
        spec.gd.n_max = n;
    }
    if let Some(g) = a.gamma {
        spec.gd.gamma = g;
    }
    if let Some(e) = a.epsilon {
        spec.gd.epsilon = e;
    }
    if let Some(s) = a.noise_sd {
        spec.noise_sd = s;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(spec)
}
