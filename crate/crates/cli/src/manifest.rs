use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use hetrec_core::io::{to_json_pretty, write_atomic};

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(sha256_bytes(&bytes))
}

/// Provenance record written next to every output set. Everything except
/// `timing_ms` is a pure function of the inputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub timing_ms: BTreeMap<String, u128>,
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    /// `config` is the bytes of the config file, or a canonical rendering of
    /// the effective parameters for commands driven by flags alone.
    pub fn new(command: &str, config: &[u8]) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: sha256_bytes(config),
            inputs: BTreeMap::new(),
            seeds: Vec::new(),
            timing_ms: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) -> Result<()> {
        self.inputs.insert(name.to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Runs `f` and records its wall time under `phase`.
    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.timing_ms.entry(phase.to_string()).or_insert(0) += start.elapsed().as_millis();
        out
    }

    /// Writes `contents` atomically under `dir` and records its hash.
    pub fn emit(&mut self, dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
        write_atomic(&dir.join(name), contents)?;
        self.outputs.insert(name.to_string(), sha256_bytes(contents));
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("manifest.json"), to_json_pretty(self)?.as_bytes())?;
        Ok(())
    }
}
