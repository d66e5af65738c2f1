//! Run manifest: written before any data file and rewritten after each one, so an interrupted run
//! still leaves a valid manifest listing what was completed.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_sha256: String,
    pub versions: BTreeMap<String, String>,
    /// running | complete | failed
    pub status: String,
    pub files: Vec<FileEntry>,
    pub timings_seconds: BTreeMap<String, f64>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes data files into one directory and keeps `manifest.json` in step with them.
#[derive(Debug)]
pub struct OutputRecord {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl OutputRecord {
    pub fn create(dir: &Path, experiment: &str, config_text: &str) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut versions = BTreeMap::new();
        versions.insert("edgeflow".to_string(), env!("CARGO_PKG_VERSION").to_string());
        let manifest = Manifest {
            experiment: experiment.to_string(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            versions,
            status: "running".into(),
            files: Vec::new(),
            timings_seconds: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
        };
        let rec = Self { dir: dir.to_path_buf(), manifest };
        rec.flush()?;
        Ok(rec)
    }

    pub fn flush(&self) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes") + "\n";
        let tmp = self.dir.join("manifest.json.tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(tmp, self.dir.join("manifest.json"))
    }

    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.manifest.files.retain(|f| f.name != name);
        self.manifest.files.push(FileEntry { name: name.to_string(), sha256: sha256_hex(contents.as_bytes()), bytes: contents.len() });
        self.flush()
    }

    pub fn timing(&mut self, stage: &str, seconds: f64) {
        self.manifest.timings_seconds.insert(stage.to_string(), seconds);
    }

    pub fn diagnostic(&mut self, key: &str, value: serde_json::Value) {
        self.manifest.diagnostics.insert(key.to_string(), value);
    }

    pub fn finish(&mut self, status: &str) -> std::io::Result<()> {
        self.manifest.status = status.to_string();
        self.flush()
    }
}
