//! Output directory bookkeeping and the run manifest.

use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use qpf_core::{QpfError, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub generator: &'static str,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileEntry>,
    pub warnings: Vec<String>,
    pub flags: Map<String, Value>,
}

pub struct Output {
    dir: PathBuf,
    files: Vec<FileEntry>,
    pub warnings: Vec<String>,
    pub flags: Map<String, Value>,
    started_at: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// One CSV table assembled in memory; a cell is any displayable value.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
    width: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Table { writer, width: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.width, "row width must match the header");
        self.writer.write_record(cells).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

/// Shortest round-trip formatting; empty for missing values.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let probe = dir.join(".qpf-write-test");
        std::fs::write(&probe, b"")
            .and_then(|_| std::fs::remove_file(&probe))
            .map_err(|e| QpfError::Domain(format!("output directory {} is not writable: {e}", dir.display())))?;
        Ok(Output { dir: dir.to_path_buf(), files: Vec::new(), warnings: Vec::new(), flags: Map::new(), started_at: now() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.files.push(FileEntry { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn table(&mut self, name: &str, table: Table) -> Result<()> {
        self.write(name, &table.into_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn warn(&mut self, message: String) {
        eprintln!("warning: {message}");
        self.warnings.push(message);
    }

    pub fn flag(&mut self, key: &str, value: impl Into<Value>) {
        self.flags.insert(key.to_string(), value.into());
    }

    pub fn finish(self, command: &str, config: Value, seed: u64) -> Result<RunManifest> {
        let manifest = RunManifest {
            tool: "qpf",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            seed,
            generator: qpf_core::rng::GENERATOR,
            started_at: self.started_at,
            finished_at: now(),
            files: self.files,
            warnings: self.warnings,
            flags: self.flags,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}
