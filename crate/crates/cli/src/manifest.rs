use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub model_hash: Option<String>,
    pub tool_version: String,
    pub wall_time_s: f64,
}

pub struct ManifestBuilder {
    command: String,
    started: Instant,
    inputs: Vec<String>,
}

impl ManifestBuilder {
    pub fn start(command: &str, inputs: &[&Path]) -> Self {
        Self {
            command: command.to_owned(),
            started: Instant::now(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        }
    }

    /// Write `manifest.json` into `dir`, replacing any previous one.
    pub fn finish(
        self,
        dir: &Path,
        config: Value,
        outputs: &[PathBuf],
        model: Option<&Path>,
    ) -> std::io::Result<()> {
        let model_hash = model.map(sha256_file).transpose()?;
        let manifest = RunManifest {
            command: self.command,
            config,
            inputs: self.inputs,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            model_hash,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        let file = std::fs::File::create(dir.join(MANIFEST_FILE))?;
        serde_json::to_writer_pretty(file, &manifest)?;
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Directory that holds `path`, or `.` for bare file names.
pub fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}
