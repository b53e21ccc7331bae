use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputHash {
    pub path: PathBuf,
    pub sha256: String,
}

/// Replay record for a command that writes an output directory. Written
/// after every other output so its presence marks a complete run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputHash>,
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub outputs: Vec<PathBuf>,
    /// Command-specific facts about how the result was produced.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<serde_json::Value>,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

impl RunManifest {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::Value::Null,
            inputs: Vec::new(),
            seed: None,
            started: now(),
            finished: 0.0,
            outputs: Vec::new(),
            run: None,
        }
    }

    pub fn record(&mut self, run: serde_json::Value) {
        self.run = Some(run);
    }

    pub fn finish(
        &mut self,
        config: serde_json::Value,
        inputs: &[PathBuf],
        seed: Option<u64>,
        outputs: Vec<PathBuf>,
        path: &Path,
    ) -> Result<()> {
        self.config = config;
        self.inputs = inputs
            .iter()
            .map(|p| {
                Ok(InputHash {
                    path: p.clone(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<_>>()?;
        self.seed = seed;
        if let Some(missing) = outputs.iter().find(|p| !p.exists()) {
            anyhow::bail!(
                "output {} vanished before the manifest was written",
                missing.display()
            );
        }
        self.outputs = outputs;
        self.finished = now();
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}
