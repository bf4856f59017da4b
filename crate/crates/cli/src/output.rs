//! Atomic output files and the run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    /// Resolved configuration; rerunning `command` with it reproduces `outputs`.
    pub config: String,
    /// SHA-256 of each output file, by file name.
    pub outputs: BTreeMap<String, String>,
    pub wall_clock_s: f64,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    pub results: serde_json::Map<String, serde_json::Value>,
}

pub struct OutputDir {
    dir: PathBuf,
    started: Instant,
    pub manifest: RunManifest,
}

impl OutputDir {
    pub fn create(dir: &Path, command: &str, seed: u64, config: String) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            started: Instant::now(),
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command: command.to_string(),
                seed,
                config,
                outputs: BTreeMap::new(),
                wall_clock_s: 0.0,
                warnings: Vec::new(),
                results: serde_json::Map::new(),
            },
        })
    }

    /// Writes `name` via a temporary file in the same directory and a rename.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), contents)?;
        self.manifest.outputs.insert(name.to_string(), hex::encode(Sha256::digest(contents)));
        Ok(())
    }

    pub fn warn(&mut self, message: String) {
        eprintln!("warning: {message}");
        self.manifest.warnings.push(message);
    }

    pub fn finish(mut self) -> Result<RunManifest, CliError> {
        self.manifest.wall_clock_s = self.started.elapsed().as_secs_f64();
        let mut json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| CliError::Numerical(format!("cannot serialize manifest: {e}")))?;
        json.push('\n');
        write_atomic(&self.dir.join("manifest.json"), json.as_bytes())?;
        Ok(self.manifest)
    }
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Numerical(format!("cannot write {}: {e}", path.display()));
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
