//! Output files with embedded provenance.
//!
//! JSON reports carry a `provenance` object directly. CSV files get a sidecar
//! `<file>.meta.json` holding the same object.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::RNG_ALGORITHM;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Enough to trace any output file back to an exact run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub problem_hash: String,
    pub master_seed: u64,
    pub tool_version: String,
    pub rng_algorithm: String,
}

impl Provenance {
    pub fn new(problem_hash: &str, master_seed: u64) -> Self {
        Self {
            problem_hash: problem_hash.to_string(),
            master_seed,
            tool_version: format!("tslab {TOOL_VERSION}"),
            rng_algorithm: RNG_ALGORITHM.to_string(),
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Writes `bytes` to `path` and the provenance (plus `details`) to the sidecar.
pub fn write_with_sidecar(path: &Path, bytes: &[u8], prov: &Provenance, details: serde_json::Value) -> Result<()> {
    std::fs::write(path, bytes)?;
    let meta = serde_json::json!({ "provenance": prov, "details": details });
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// Pretty JSON with a top-level `provenance` entry merged into an object.
pub fn write_json_report<T: Serialize>(path: &Path, value: &T, prov: &Provenance) -> Result<()> {
    let mut v = serde_json::to_value(value)?;
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("provenance".into(), serde_json::to_value(prov)?);
    } else {
        v = serde_json::json!({ "provenance": prov, "value": v });
    }
    std::fs::write(path, serde_json::to_string_pretty(&v)? + "\n")?;
    Ok(())
}
