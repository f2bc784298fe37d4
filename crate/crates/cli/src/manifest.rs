//! Provenance record written next to every output bundle.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::Outputs;
use crate::config::FileConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Run,
    Sweep,
    Compare,
    Dsa,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: CommandName,
    /// Whether the per-slot trace was dumped.
    pub trace: bool,
    pub config_path: Option<String>,
    pub output_dir: String,
    pub seed: u64,
    /// Worker threads used; results do not depend on it.
    pub threads: usize,
    /// Resolved configuration, environment and flag overrides folded in.
    pub config: FileConfig,
    pub outputs: Vec<OutputDigest>,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
}

pub fn digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn digests(outputs: &Outputs) -> Vec<OutputDigest> {
    outputs
        .files
        .iter()
        .map(|(name, bytes)| OutputDigest {
            file: name.clone(),
            bytes: bytes.len() as u64,
            sha256: digest(bytes),
        })
        .collect()
}

/// Write every output file and then the manifest into `dir`.
pub fn write_bundle(dir: &Path, outputs: &Outputs, manifest: &Manifest) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, bytes) in &outputs.files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    }
    let path = dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Runtime(format!("manifest encoding: {e}")))?;
    json.push('\n');
    fs::write(&path, json).map_err(|e| CliError::io(&path, e))
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid manifest {}: {e}", path.display())))
}

/// Files whose digests differ between two manifests, or that only one has.
pub fn differing_outputs(expected: &[OutputDigest], actual: &[OutputDigest]) -> Vec<String> {
    let mut out = Vec::new();
    for e in expected {
        match actual.iter().find(|a| a.file == e.file) {
            Some(a) if a.sha256 == e.sha256 => {}
            _ => out.push(e.file.clone()),
        }
    }
    for a in actual {
        if !expected.iter().any(|e| e.file == a.file) {
            out.push(a.file.clone());
        }
    }
    out
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(MANIFEST_FILE)
}
