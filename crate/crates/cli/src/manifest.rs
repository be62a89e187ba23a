use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
    /// Columns left out of the digest because they hold timings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excludes: Option<String>,
}

/// Record of one invocation, enough to run it again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub program: String,
    pub command: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    /// Every flag after defaults were applied.
    pub flags: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub threads: usize,
    pub cwd: PathBuf,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub stdout_sha256: String,
    #[serde(default)]
    pub details: BTreeMap<String, serde_json::Value>,
    pub toolkit_version: String,
    pub wall_seconds: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("{}: cannot read manifest", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("{}: not a run manifest", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n")
            .with_context(|| format!("{}: cannot write manifest", path.display()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).with_context(|| format!("{}: cannot read", path.display()))?;
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
        excludes: None,
    })
}

/// Digest of a CSV file with one named column removed from every row.
pub fn csv_digest_without(path: &Path, column: &str) -> Result<FileDigest> {
    let text =
        fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let skip = header.iter().position(|h| *h == column);
    let mut kept = String::new();
    for line in std::iter::once(header.join(",")).chain(lines.map(str::to_owned)) {
        let fields: Vec<&str> = line
            .split(',')
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, f)| f)
            .collect();
        kept.push_str(&fields.join(","));
        kept.push('\n');
    }
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: sha256_hex(kept.as_bytes()),
        excludes: Some(column.to_owned()),
    })
}
