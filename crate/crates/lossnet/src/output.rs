//! CSV tables and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Writes `rows` as CSV with a header row.
pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// `<out>.manifest.json` next to the output file.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub struct ManifestInput<'a> {
    pub command: &'a str,
    pub config_path: &'a Path,
    pub config_text: &'a str,
    pub seed: u64,
    pub overrides: &'a [String],
    pub output: &'a Path,
    pub summary: Value,
}

/// Records what produced an output file. No timestamps, so reruns produce
/// the same bytes.
pub fn write_manifest(input: &ManifestInput<'_>) -> Result<PathBuf> {
    let hash = hex::encode(Sha256::digest(input.config_text.as_bytes()));
    let manifest = json!({
        "command": input.command,
        "config": input.config_path.display().to_string(),
        "config_sha256": hash,
        "seed": input.seed,
        "overrides": input.overrides,
        "output": input.output.file_name().map(|n| n.to_string_lossy().into_owned()),
        "versions": {
            "lossnet": env!("CARGO_PKG_VERSION"),
            "lossnet-core": lossnet_core::VERSION,
        },
        "summary": input.summary,
    });
    let path = manifest_path(input.output);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}
