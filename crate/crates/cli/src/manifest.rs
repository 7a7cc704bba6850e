//! Run manifests: what was run, on which inputs, producing which bytes.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub command: String,
    /// SHA-256 of the canonical JSON of every setting that affects results.
    pub config_digest: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub library_version: String,
    pub dataset_digest: Option<String>,
    /// SHA-256 of each output file, by file name.
    pub outputs: BTreeMap<String, String>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        let canonical = serde_json::to_vec(&config).expect("JSON values always serialize");
        Self {
            command_line: std::env::args().collect(),
            command: command.to_string(),
            config_digest: sha256_hex(&canonical),
            config,
            seed: None,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset_digest: None,
            outputs: BTreeMap::new(),
            timestamp: timestamp(),
        }
    }

    pub fn record_output(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        })
}
