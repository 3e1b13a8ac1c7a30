use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::params::ExperimentConfig;
use super::RunError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub crate_version: String,
    pub seed: u64,
    pub inputs: std::collections::BTreeMap<String, String>,
    pub inputs_sha256: String,
    pub files: Vec<FileEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Writes artifacts into one directory and records their hashes.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<(), RunError> {
        let mut buf = Vec::new();
        fill(&mut buf).map_err(|e| RunError::Io(format!("{name}: {e}")))?;
        self.write(name, &buf)
    }

    /// Table with a header row; every cell is already formatted.
    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
        self.csv(name, |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
            Ok(())
        })
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), RunError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| RunError::Io(format!("{name}: {e}")))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Writes the manifest listing every file written so far.
    pub fn finish(mut self, cfg: &ExperimentConfig) -> Result<Manifest, RunError> {
        let manifest = Manifest {
            command: cfg.command.clone(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed()?,
            inputs: cfg.params.clone(),
            inputs_sha256: cfg.inputs_hash(),
            files: self.files.clone(),
        };
        self.json(MANIFEST_NAME, &manifest)?;
        Ok(manifest)
    }
}
