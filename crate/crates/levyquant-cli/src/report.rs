//! Output emission: RFC-4180 CSV tables, run manifests, and content hashes.
//!
//! Float columns are printed with a fixed scientific format so that a rerun
//! with the same seed is byte-identical regardless of worker count.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// FNV-1a 64-bit over the canonical JSON of a value; the traceability hash
/// carried by every CSV row.
pub fn content_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("serializable value");
    let mut h: u64 = 0xcbf29ce484222325;
    for b in json.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Fixed-width float formatting for CSV cells.
pub fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Write one CSV table.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-point execution record for the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub n: u64,
    pub m: f64,
    pub millis: u128,
    pub warnings: Vec<String>,
}

/// Everything needed to trace a CSV back to its run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub name: String,
    pub command: String,
    pub code_version: String,
    pub config_hash: String,
    pub models: serde_json::Value,
    pub model_hashes: Vec<String>,
    pub seed: u64,
    pub sample_count: usize,
    pub shards: u64,
    pub correction: String,
    pub points: Vec<PointRecord>,
    pub assertion_failures: Vec<String>,
}

impl RunManifest {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        command: &str,
        config_hash: String,
        models: serde_json::Value,
        model_hashes: Vec<String>,
        seed: u64,
        sample_count: usize,
        shards: u64,
        correction: &str,
    ) -> Self {
        RunManifest {
            name: name.to_string(),
            command: command.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            models,
            model_hashes,
            seed,
            sample_count,
            shards,
            correction: correction.to_string(),
            points: Vec::new(),
            assertion_failures: Vec::new(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join(format!("{}_manifest.json", self.name));
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
