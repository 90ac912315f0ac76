//! Report files. Every JSON report is wrapped in an envelope carrying the
//! schema version, the config hash and the crate versions. Files are
//! written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Versions {
    pub radbound_core: &'static str,
    pub radbound_harness: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema_version: u32,
    pub scenario: &'static str,
    pub config_hash: String,
    pub versions: Versions,
    /// normalized config without `output_dir`
    pub config: ScenarioConfig,
    pub result: &'a T,
}

/// SHA-256 of the normalized config, output directory excluded so the same
/// experiment hashes identically wherever it is written.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let bytes = serde_json::to_vec(&location_free(cfg)).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

fn location_free(cfg: &ScenarioConfig) -> ScenarioConfig {
    let mut normalized = cfg.clone();
    normalized.output_dir.clear();
    normalized
}

pub fn envelope<'a, T: Serialize>(cfg: &'a ScenarioConfig, result: &'a T) -> Envelope<'a, T> {
    Envelope {
        schema_version: SCHEMA_VERSION,
        scenario: cfg.scenario.label(),
        config_hash: config_hash(cfg),
        versions: Versions {
            radbound_core: radbound_core::VERSION,
            radbound_harness: env!("CARGO_PKG_VERSION"),
        },
        config: location_free(cfg),
        result,
    }
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Collects the files of one scenario run.
#[derive(Debug)]
pub struct ReportWriter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl ReportWriter {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            written: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn json<T: Serialize>(&mut self, name: &str, cfg: &ScenarioConfig, result: &T) -> std::io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(&envelope(cfg, result)).map_err(std::io::Error::other)?;
        text.push('\n');
        self.text(name, &text)
    }

    pub fn text(&mut self, name: &str, contents: &str) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
