//! Output directory bookkeeping: every file written goes into the manifest
//! with its SHA-256.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::config::{ExperimentConfig, Seeds};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    task: &'static str,
    config_hash: String,
    seeds: Seeds,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    details: serde_json::Value,
    /// Wall-clock fields; everything else is reproducible.
    started_unix_s: u64,
    wall_time_s: f64,
    files: &'a [FileEntry],
}

pub struct Outputs {
    dir: PathBuf,
    files: Vec<FileEntry>,
    started: Instant,
    started_unix_s: u64,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
            started_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: crate::reservoir::cache::hex(&Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `manifest.json` and returns every path produced.
    pub fn finish(self, cfg: &ExperimentConfig, details: serde_json::Value) -> Result<Vec<PathBuf>> {
        let manifest = Manifest {
            tool: "spinrc",
            version: env!("CARGO_PKG_VERSION"),
            task: cfg.task.name(),
            config_hash: cfg.hash(),
            seeds: cfg.seeds,
            details,
            started_unix_s: self.started_unix_s,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            files: &self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        let mut out: Vec<PathBuf> = self.files.iter().map(|f| self.dir.join(&f.path)).collect();
        out.push(path);
        Ok(out)
    }
}
