//! CSV and metadata sidecar writers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::EffectiveConfig;
use crate::experiment::{Cell, SweepResult};

/// Rendering of infeasible or diverged cells.
pub const INF_TOKEN: &str = "INF";

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("nothing to write: the result has no rows")]
    Empty,
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn cell_text(c: Cell) -> String {
    match c {
        Cell::Value(v) if v.is_finite() => format!("{v}"),
        _ => INF_TOKEN.to_owned(),
    }
}

/// Header row of series names, then one row per grid point.
pub fn render_csv(result: &SweepResult) -> Result<String, OutputError> {
    if result.x.is_empty() {
        return Err(OutputError::Empty);
    }
    let mut out = String::new();
    out.push_str(&result.x_label);
    for s in &result.series {
        out.push(',');
        out.push_str(&s.name);
    }
    out.push('\n');
    for (i, x) in result.x.iter().enumerate() {
        write!(out, "{x}").expect("writing to a String");
        for s in &result.series {
            out.push(',');
            out.push_str(&cell_text(s.values[i]));
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    seed: u64,
    replicas: usize,
    config_sha256: String,
    provenance: &'a str,
    config: &'a EffectiveConfig,
}

pub fn render_metadata(result: &SweepResult, config: &EffectiveConfig) -> String {
    let side = Sidecar {
        seed: result.meta.seed,
        replicas: result.meta.replicas,
        config_sha256: config.hash(),
        provenance: &result.meta.provenance,
        config,
    };
    toml::to_string(&side).expect("plain fields serialize")
}

/// `<csv path>.meta.toml`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".meta.toml");
    PathBuf::from(name)
}

fn write(path: &Path, text: &str) -> Result<(), OutputError> {
    std::fs::write(path, text).map_err(|source| OutputError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Writes the CSV and its sidecar; returns the sidecar path.
pub fn emit_csv(
    result: &SweepResult,
    config: &EffectiveConfig,
    path: &Path,
) -> Result<PathBuf, OutputError> {
    write(path, &render_csv(result)?)?;
    let meta = sidecar_path(path);
    write(&meta, &render_metadata(result, config))?;
    Ok(meta)
}
