//! File emission. Every data file passes through an [`OutputBundle`] so its
//! SHA-256 lands in the manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const TIMING_FILE: &str = "timing.toml";

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Rows of a CSV table with one header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| fmt_f64(x)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner()
            .map_err(|e| Error::Other(format!("csv flush: {e}")))
    }
}

/// Parse a CSV file written by [`Table::to_bytes`].
pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok(Table { header, rows })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A directory of data files plus their hashes.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputBundle {
    pub dir: PathBuf,
    /// `(relative path, sha256)` in write order.
    pub files: Vec<(String, String)>,
}

impl OutputBundle {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(OutputBundle {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<()> {
        self.write(name, &table.to_bytes()?)
    }

    pub fn write_toml<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = toml::to_string(value).map_err(|e| Error::Other(format!("toml: {e}")))?;
        self.write(name, text.as_bytes())
    }

    /// Pull in the files of a bundle written to a subdirectory.
    pub fn absorb(&mut self, prefix: &str, other: OutputBundle) {
        for (name, hash) in other.files {
            self.files.push((format!("{prefix}/{name}"), hash));
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write the manifest (deterministic) and the timing record (not).
    pub fn finish(
        &mut self,
        command: &str,
        seeds: &[u64],
        config_echo: &str,
        wall: Duration,
        threads: usize,
    ) -> Result<()> {
        use toml::Value;
        let config: toml::Table = toml::from_str(config_echo)
            .map_err(|e| Error::Other(format!("config echo: {}", e.message())))?;
        let files: toml::Table = self
            .files
            .iter()
            .map(|(name, hash)| (name.clone(), Value::String(hash.clone())))
            .collect();
        let mut doc = toml::Table::new();
        doc.insert("command".into(), Value::String(command.into()));
        doc.insert(
            "version".into(),
            Value::String(env!("CARGO_PKG_VERSION").into()),
        );
        doc.insert(
            "seeds".into(),
            Value::Array(
                seeds
                    .iter()
                    .map(|&s| Value::String(s.to_string()))
                    .collect(),
            ),
        );
        doc.insert("files".into(), Value::Table(files));
        doc.insert("config".into(), Value::Table(config));
        let text = toml::to_string(&doc).map_err(|e| Error::Other(format!("toml: {e}")))?;
        let path = self.dir.join(MANIFEST_FILE);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;

        let timing = format!(
            "wall_time_s = {}\nthreads = {}\n",
            wall.as_secs_f64(),
            threads
        );
        let path = self.dir.join(TIMING_FILE);
        fs::write(&path, timing).map_err(|e| Error::io(&path, e))
    }
}

/// The `[config]` table of a manifest, as a standalone config document.
pub fn config_from_manifest(text: &str) -> Result<String> {
    let doc: toml::Table =
        toml::from_str(text).map_err(|e| Error::config("manifest", e.message().to_string()))?;
    let cfg = doc
        .get("config")
        .and_then(|v| v.as_table())
        .ok_or_else(|| Error::config("manifest", "no [config] table"))?;
    toml::to_string(cfg).map_err(|e| Error::Other(format!("toml: {e}")))
}
