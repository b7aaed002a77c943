//! Run manifests: what was run, with which settings, and digests of what
//! it produced.

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct OutputDigest {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub threads: usize,
    pub wall_time_secs: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    format!("{:x}", Sha256::digest(data))
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: Option<u64>, threads: usize) -> Self {
        RunManifest {
            command: command.into(),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            threads,
            wall_time_secs: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, name: &str, data: &[u8]) {
        self.outputs.push(OutputDigest { name: name.into(), bytes: data.len(), sha256: sha256_hex(data) });
    }
}
