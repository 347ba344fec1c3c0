//! Run manifests: configuration hash, per-stage timings, output hashes, and
//! check outcomes. Identical config + seed must reproduce identical output
//! hashes.

use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub seconds: f64,
    pub outputs: Vec<OutputRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    pub checks: Vec<CheckRecord>,
}

impl RunManifest {
    pub fn new(config_hash: String, scenario: String, seed: u64) -> Self {
        RunManifest {
            config_hash,
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario,
            seed,
            stages: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn add_check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(CheckRecord { name: name.into(), pass, detail: detail.into() });
    }

    pub fn write(&self, dir: &Path, base: &str) -> anyhow::Result<()> {
        std::fs::write(
            dir.join(format!("{base}.json")),
            serde_json::to_string_pretty(self)?,
        )?;
        Ok(())
    }
}

/// Times a stage and records its outputs' hashes.
pub struct StageTimer {
    name: String,
    start: Instant,
    outputs: Vec<OutputRecord>,
}

impl StageTimer {
    pub fn start(name: impl Into<String>) -> Self {
        StageTimer { name: name.into(), start: Instant::now(), outputs: Vec::new() }
    }

    pub fn output(&mut self, dir: &Path, file: &str) -> anyhow::Result<()> {
        let path = dir.join(file);
        let sha256 = crate::io::file_sha256(&path)?;
        self.outputs.push(OutputRecord { path: file.to_string(), sha256 });
        Ok(())
    }

    pub fn finish(self, manifest: &mut RunManifest) {
        manifest.stages.push(StageRecord {
            name: self.name,
            seconds: self.start.elapsed().as_secs_f64(),
            outputs: self.outputs,
        });
    }
}
