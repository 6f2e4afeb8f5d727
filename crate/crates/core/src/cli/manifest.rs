use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::Config;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

impl FileRecord {
    pub fn new(path: &Path, bytes: &[u8]) -> Self {
        FileRecord { path: path.display().to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() }
    }
}

/// Self-description of one run. Everything except `timings` is a function of the inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub code_version: String,
    pub status: String,
    /// error message of a failed run
    pub diagnostics: Option<String>,
    pub config: Config,
    pub config_sha256: String,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub summary: serde_json::Value,
    /// wall-clock seconds per stage
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &Config) -> Self {
        let text = config.to_toml();
        RunManifest {
            subcommand: subcommand.into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            status: "ok".into(),
            diagnostics: None,
            config: config.clone(),
            config_sha256: sha256_hex(text.as_bytes()),
            inputs: Vec::new(),
            outputs: Vec::new(),
            summary: serde_json::Value::Null,
            timings: BTreeMap::new(),
        }
    }
}
