//! Run configuration: TOML file, command-line overrides and defaults.
//!
//! Powers always carry a unit (`dBm`, `W` or `mW`). A grid is either a list
//! of powers or a range `"START:STOP:STEP_DB"` such as `"0dBm:40dBm:2"`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wncs_core::PlantParams;

use crate::experiment::{
    ExperimentKind, ExperimentSpec, Recipe, DEFAULT_HORIZON, DEFAULT_REALIZATIONS,
    DEFAULT_REPLICAS, DEFAULT_SEED,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("`{field}`: {reason}")]
    Field { field: String, reason: String },
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config {path}: {source}")]
    Schema {
        path: PathBuf,
        source: toml::de::Error,
    },
}

pub type Result<T> = std::result::Result<T, ConfigError>;

fn field_err(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_owned(),
        reason: reason.into(),
    }
}

/// Parses `"20 dBm"`, `"0.1W"`, `"100 mW"` into watts.
pub fn parse_power(field: &str, text: &str) -> Result<f64> {
    let t = text.trim();
    let split = t
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .ok_or_else(|| field_err(field, format!("power `{t}` has no unit; use dBm, W or mW")))?;
    let (num, unit) = t.split_at(split);
    let v: f64 = num
        .trim()
        .parse()
        .map_err(|_| field_err(field, format!("cannot read `{}` as a number", num.trim())))?;
    if !v.is_finite() {
        return Err(field_err(field, "power must be finite"));
    }
    let watts = match unit.trim() {
        "dBm" | "dbm" => 10f64.powf((v - 30.0) / 10.0),
        "W" | "w" => v,
        "mW" | "mw" => v * 1e-3,
        other => {
            return Err(field_err(
                field,
                format!("unknown power unit `{other}`; use dBm, W or mW"),
            ))
        }
    };
    if !(watts > 0.0) {
        return Err(field_err(field, "power must be positive"));
    }
    Ok(watts)
}

/// A grid written as `"START:STOP:STEP_DB"` or `"P1,P2,…"`.
pub fn parse_grid(field: &str, text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let lo = parse_power(field, start)?;
            let hi = parse_power(field, stop)?;
            let step: f64 = step.trim().parse().map_err(|_| {
                field_err(field, format!("range step `{step}` is not a number of dB"))
            })?;
            if !(step > 0.0) {
                return Err(field_err(field, "range step must be positive"));
            }
            let (lo_db, hi_db) = (10.0 * lo.log10(), 10.0 * hi.log10());
            let n = ((hi_db - lo_db) / step + 1e-9).floor();
            if !(0.0..=1e6).contains(&n) {
                return Err(field_err(
                    field,
                    "range must run upward with at most 1e6 points",
                ));
            }
            Ok((0..=n as usize)
                .map(|i| 10f64.powf((lo_db + step * i as f64) / 10.0))
                .collect())
        }
        [_] => text.split(',').map(|p| parse_power(field, p)).collect(),
        _ => Err(field_err(
            field,
            "expected START:STOP:STEP_DB or a comma-separated list",
        )),
    }
}

/// A grid in a config file: range string or array of power strings.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Text(String),
    List(Vec<toml::Value>),
}

/// Every setting, each optional; files and flags both produce one.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub horizon: Option<usize>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub a: Option<f64>,
    pub sigma_w2: Option<f64>,
    pub sigma_z2: Option<toml::Value>,
    pub p0: Option<toml::Value>,
    pub powers: Option<GridValue>,
    pub h: Option<Vec<f64>>,
    pub sigma_h2: Option<Vec<f64>>,
    pub mean_gain: Option<f64>,
    pub group_sizes: Option<Vec<usize>>,
    pub realizations: Option<usize>,
    pub x0: Option<f64>,
    pub a_c: Option<Vec<f64>>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Schema { source, .. } => ConfigError::Schema {
                path: path.to_owned(),
                source,
            },
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|source| ConfigError::Schema {
            path: PathBuf::from("<inline>"),
            source,
        })
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RawConfig) -> Self {
        overlay!(
            self,
            top,
            experiment,
            seed,
            replicas,
            horizon,
            threads,
            output,
            a,
            sigma_w2,
            sigma_z2,
            p0,
            powers,
            h,
            sigma_h2,
            mean_gain,
            group_sizes,
            realizations,
            x0,
            a_c
        );
        self
    }
}

fn power_value(field: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::String(s) => parse_power(field, s),
        toml::Value::Integer(_) | toml::Value::Float(_) => Err(field_err(
            field,
            "unitless power is ambiguous; write e.g. \"20 dBm\" or \"0.1 W\"",
        )),
        _ => Err(field_err(
            field,
            "expected a power string such as \"20 dBm\"",
        )),
    }
}

fn grid_value(field: &str, g: &GridValue) -> Result<Vec<f64>> {
    match g {
        GridValue::Text(s) => parse_grid(field, s),
        GridValue::List(items) => items.iter().map(|v| power_value(field, v)).collect(),
    }
}

/// Validated configuration with powers in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub replicas: usize,
    pub horizon: usize,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub a: f64,
    pub sigma_w2: f64,
    pub sigma_z2: f64,
    pub powers: Vec<f64>,
    pub h: Vec<f64>,
    pub sigma_h2: Vec<f64>,
    pub mean_gain: f64,
    pub group_sizes: Vec<usize>,
    pub realizations: usize,
    pub x0: f64,
    pub a_c: Vec<f64>,
}

pub fn parse_kind(name: &str) -> Result<ExperimentKind> {
    Ok(match name {
        "trace" => ExperimentKind::Trace,
        "compare" | "single-compare" => ExperimentKind::SingleCompare,
        "multi-slow" | "multi-slow-sweep" => ExperimentKind::MultiSlowSweep,
        "multi-fast" | "multi-fast-sweep" => ExperimentKind::MultiFastSweep,
        "select-sweep" | "selection-sweep" => ExperimentKind::SelectionSweep,
        other => {
            return Err(field_err(
                "experiment",
                format!("unknown experiment `{other}`"),
            ))
        }
    })
}

fn default_grid(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Trace => "20dBm",
        ExperimentKind::SingleCompare => "0dBm:40dBm:2",
        ExperimentKind::MultiSlowSweep => "0dBm:30dBm:1",
        ExperimentKind::MultiFastSweep => "5dBm:35dBm:1",
        ExperimentKind::SelectionSweep => "-20dBm:30dBm:2",
    }
}

fn require_positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(field_err(field, "must be positive and finite"))
    }
}

impl RunConfig {
    /// Applies defaults to `raw` and validates. `kind` wins over the file's
    /// `experiment` entry when given.
    pub fn resolve(kind: Option<ExperimentKind>, raw: RawConfig) -> Result<Self> {
        let kind = match (kind, raw.experiment.as_deref()) {
            (Some(k), _) => k,
            (None, Some(name)) => parse_kind(name)?,
            (None, None) => return Err(field_err("experiment", "no experiment given")),
        };
        let default_a = if kind == ExperimentKind::SelectionSweep {
            1.1
        } else {
            1.5
        };
        let a = raw.a.unwrap_or(default_a);
        if !a.is_finite() || a.abs() <= 1.0 {
            return Err(field_err(
                "a",
                format!("plant must be open-loop unstable (|a| > 1), got {a}"),
            ));
        }
        let sigma_w2 = require_positive("sigma_w2", raw.sigma_w2.unwrap_or(0.1))?;
        let sigma_z2 = match &raw.sigma_z2 {
            Some(v) => power_value("sigma_z2", v)?,
            None => parse_power("sigma_z2", "-40dBm")?,
        };
        // A lone p0 is a one-point grid; an explicit grid takes precedence.
        let powers = match (&raw.powers, &raw.p0) {
            (Some(g), _) => grid_value("powers", g)?,
            (None, Some(p)) => vec![power_value("p0", p)?],
            (None, None) => parse_grid("powers", default_grid(kind))?,
        };
        if powers.is_empty() {
            return Err(field_err("powers", "grid is empty"));
        }
        if powers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(field_err("powers", "grid must be strictly increasing"));
        }
        let replicas = raw.replicas.unwrap_or(DEFAULT_REPLICAS);
        if replicas == 0 {
            return Err(field_err("replicas", "must be at least 1"));
        }
        let horizon = raw.horizon.unwrap_or(DEFAULT_HORIZON);
        if horizon == 0 {
            return Err(field_err("horizon", "must be at least 1"));
        }
        if raw.threads == Some(0) {
            return Err(field_err("threads", "must be at least 1"));
        }
        let h = raw.h.unwrap_or_else(|| match kind {
            ExperimentKind::MultiSlowSweep => vec![0.01, 0.02],
            _ => vec![0.01],
        });
        for &v in &h {
            require_positive("h", v)?;
        }
        if kind != ExperimentKind::MultiSlowSweep && h.len() != 1 {
            return Err(field_err("h", "this experiment takes a single coefficient"));
        }
        let sigma_h2 = raw.sigma_h2.unwrap_or_else(|| vec![1e-4, 4e-4]);
        for &v in &sigma_h2 {
            require_positive("sigma_h2", v)?;
        }
        let mean_gain = require_positive("mean_gain", raw.mean_gain.unwrap_or(1e-4))?;
        let group_sizes = raw.group_sizes.unwrap_or_else(|| vec![2, 5, 10]);
        if group_sizes.is_empty() || group_sizes.contains(&0) {
            return Err(field_err("group_sizes", "need one or more positive sizes"));
        }
        let realizations = raw.realizations.unwrap_or(DEFAULT_REALIZATIONS);
        if realizations == 0 {
            return Err(field_err("realizations", "must be at least 1"));
        }
        let x0 = raw.x0.unwrap_or(5.0);
        if !x0.is_finite() {
            return Err(field_err("x0", "must be finite"));
        }
        let a_c = raw.a_c.unwrap_or_else(|| vec![0.0, 0.5, 0.9, 1.01]);
        if a_c.is_empty() || a_c.iter().any(|v| !v.is_finite()) {
            return Err(field_err("a_c", "need one or more finite values"));
        }
        Ok(RunConfig {
            kind,
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            replicas,
            horizon,
            threads: raw.threads,
            output: raw.output,
            a,
            sigma_w2,
            sigma_z2,
            powers,
            h,
            sigma_h2,
            mean_gain,
            group_sizes,
            realizations,
            x0,
            a_c,
        })
    }

    pub fn spec(&self) -> Result<ExperimentSpec> {
        let plant =
            PlantParams::new(self.a, self.sigma_w2).map_err(|e| field_err("a", e.to_string()))?;
        let recipe = match self.kind {
            ExperimentKind::Trace => Recipe::Trace {
                h: self.h[0],
                a_c: self.a_c.clone(),
                x0: self.x0,
            },
            ExperimentKind::SingleCompare => Recipe::SingleCompare { h: self.h[0] },
            ExperimentKind::MultiSlowSweep => Recipe::MultiSlow { h: self.h.clone() },
            ExperimentKind::MultiFastSweep => Recipe::MultiFast {
                sigma_h2: self.sigma_h2.clone(),
            },
            ExperimentKind::SelectionSweep => Recipe::Selection {
                mean_gain: self.mean_gain,
                group_sizes: self.group_sizes.clone(),
                realizations: self.realizations,
            },
        };
        Ok(ExperimentSpec {
            recipe,
            plant,
            sigma_z2: self.sigma_z2,
            powers: self.powers.clone(),
            horizon: self.horizon,
            replicas: self.replicas,
            seed: self.seed,
        })
    }

    /// Settings that determine the results, in file form. Worker count and
    /// output path are left out: neither changes a single output byte.
    pub fn effective(&self) -> EffectiveConfig {
        let w = |p: f64| format!("{p} W");
        let kind = self.kind;
        let pick = |k: ExperimentKind, v: Vec<f64>| (kind == k).then_some(v);
        EffectiveConfig {
            experiment: kind.name().to_owned(),
            seed: self.seed,
            replicas: self.replicas,
            horizon: self.horizon,
            a: self.a,
            sigma_w2: self.sigma_w2,
            sigma_z2: w(self.sigma_z2),
            powers: self.powers.iter().map(|&p| w(p)).collect(),
            h: match kind {
                ExperimentKind::Trace
                | ExperimentKind::SingleCompare
                | ExperimentKind::MultiSlowSweep => Some(self.h.clone()),
                _ => None,
            },
            sigma_h2: pick(ExperimentKind::MultiFastSweep, self.sigma_h2.clone()),
            mean_gain: (kind == ExperimentKind::SelectionSweep).then_some(self.mean_gain),
            group_sizes: (kind == ExperimentKind::SelectionSweep).then(|| self.group_sizes.clone()),
            realizations: (kind == ExperimentKind::SelectionSweep).then_some(self.realizations),
            x0: (kind == ExperimentKind::Trace).then_some(self.x0),
            a_c: pick(ExperimentKind::Trace, self.a_c.clone()),
        }
    }
}

/// The resolved settings as written to the metadata sidecar; readable back
/// as a config file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveConfig {
    pub experiment: String,
    pub seed: u64,
    pub replicas: usize,
    pub horizon: usize,
    pub a: f64,
    pub sigma_w2: f64,
    pub sigma_z2: String,
    pub powers: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_h2: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_c: Option<Vec<f64>>,
}

impl EffectiveConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain fields serialize")
    }

    /// Hex SHA-256 of [`Self::to_toml`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}
