//! Run manifests: one JSON document per CLI invocation recording what was run,
//! on which inputs, with which effective configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::trainer::checkpoint::FORMAT_VERSION as CHECKPOINT_VERSION;

/// Version of the evaluation report layout.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector; rerunning it replays the run.
    pub argv: Vec<String>,
    /// Effective configuration after merging defaults, file and flags.
    pub config: serde_json::Value,
    /// SHA-256 of the compact JSON encoding of `config`.
    pub config_hash: String,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<String>,
    pub wall_time_secs: f64,
    pub versions: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_hash(config: &serde_json::Value) -> String {
    sha256_hex(serde_json::to_string(config).expect("json value serializes").as_bytes())
}

/// Digest of an input file, or of every file directly inside a directory.
pub fn digest_inputs(paths: &[&Path]) -> Result<Vec<FileDigest>, CliError> {
    let mut out = Vec::new();
    for &p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::data(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| e.is_file())
                .collect();
            entries.sort();
            for e in entries {
                out.push(digest_file(&e)?);
            }
        } else {
            out.push(digest_file(p)?);
        }
    }
    Ok(out)
}

fn digest_file(p: &Path) -> Result<FileDigest, CliError> {
    let bytes = fs::read(p).map_err(|e| CliError::data(p, e))?;
    Ok(FileDigest { path: p.display().to_string(), sha256: sha256_hex(&bytes) })
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("intseq".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("checkpoint_format".to_string(), CHECKPOINT_VERSION.to_string()),
        ("report_format".to_string(), REPORT_VERSION.to_string()),
    ])
}

/// Where the manifest of a run goes: `<dir>/<command>.manifest.json` for a
/// directory output, `<file>.manifest.json` for a file output.
pub fn manifest_path(command: &str, output: &Path, output_is_dir: bool) -> PathBuf {
    if output_is_dir {
        output.join(format!("{command}.manifest.json"))
    } else {
        let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        output.with_file_name(name)
    }
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::data(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::data(path, e))
    }
}
