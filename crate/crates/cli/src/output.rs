use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use eegaug::atomic_write;

use crate::error::Result;

/// Collects the artifacts of one run and writes `manifest.json` last.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    files: &'a [String],
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `rel` atomically and records it.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        atomic_write(&path, bytes)?;
        self.files.push(rel.to_string());
        Ok(path)
    }

    pub fn finish(mut self, command: &str, config_hash: &str) -> Result<()> {
        self.files.sort();
        let m = Manifest {
            command,
            config_hash,
            files: &self.files,
        };
        let mut bytes = serde_json::to_vec_pretty(&m)?;
        bytes.push(b'\n');
        atomic_write(&self.root.join("manifest.json"), &bytes)?;
        Ok(())
    }
}
