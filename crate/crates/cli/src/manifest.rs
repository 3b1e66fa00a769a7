use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command. No wall-clock time is recorded, so
/// equal inputs give an equal manifest.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config_sha256: Option<String>,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<Artifact>,
    pub tool_version: String,
}

/// Collects artifacts written into one output directory.
pub struct OutDir {
    root: PathBuf,
    written: Vec<(String, Vec<u8>)>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::runtime(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: impl Into<Vec<u8>>) -> Result<PathBuf, CliError> {
        let bytes = bytes.into();
        let path = self.root.join(name);
        std::fs::write(&path, &bytes).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
        self.written.retain(|(n, _)| n != name);
        self.written.push((name.to_string(), bytes));
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(CliError::runtime)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn finish(mut self, config_sha256: Option<String>, seeds: Vec<u64>) -> Result<(), CliError> {
        self.written.sort_by(|a, b| a.0.cmp(&b.0));
        let manifest = RunManifest {
            command: std::env::args().skip(1).collect(),
            config_sha256,
            seeds,
            artifacts: self
                .written
                .iter()
                .map(|(path, bytes)| Artifact {
                    path: path.clone(),
                    sha256: sha256_hex(bytes),
                })
                .collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(CliError::runtime)?;
        text.push('\n');
        let path = self.root.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
    }
}
