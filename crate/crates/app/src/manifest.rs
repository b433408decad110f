//! Run manifest: inputs, seeds and artifact hashes of a pipeline run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{role} `{path}` has sha256 {actual}, manifest records {expected}")]
    HashMismatch {
        role: String,
        path: PathBuf,
        expected: String,
        actual: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ManifestError + '_ {
    move |source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String, ManifestError> {
    Ok(sha256_hex(&fs::read(path).map_err(io_err(path))?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the manifest's directory unless absolute.
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub seeds: BTreeMap<String, u64>,
    pub config_sha256: BTreeMap<String, String>,
    pub datasets: BTreeMap<String, FileRecord>,
    pub artifacts: BTreeMap<String, FileRecord>,
}

impl RunManifest {
    /// Reads a manifest and checks every listed file against its hash.
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let manifest: RunManifest =
            serde_json::from_str(&fs::read_to_string(path).map_err(io_err(path))?)?;
        manifest.verify(base_dir(path))?;
        Ok(manifest)
    }

    /// Loads `path` if it exists, otherwise starts an empty manifest.
    pub fn load_or_default(path: &Path) -> Result<Self, ManifestError> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::default())
        }
    }

    pub fn verify(&self, base: &Path) -> Result<(), ManifestError> {
        for (role, rec) in self.datasets.iter().chain(&self.artifacts) {
            let full = base.join(&rec.path);
            let actual = file_sha256(&full)?;
            if actual != rec.sha256 {
                return Err(ManifestError::HashMismatch {
                    role: role.clone(),
                    path: full,
                    expected: rec.sha256.clone(),
                    actual,
                });
            }
        }
        Ok(())
    }

    pub fn record_dataset(
        &mut self,
        manifest_path: &Path,
        role: &str,
        file: &Path,
    ) -> Result<(), ManifestError> {
        let rec = record(manifest_path, file)?;
        self.datasets.insert(role.to_string(), rec);
        Ok(())
    }

    pub fn record_artifact(
        &mut self,
        manifest_path: &Path,
        role: &str,
        file: &Path,
    ) -> Result<(), ManifestError> {
        let rec = record(manifest_path, file)?;
        self.artifacts.insert(role.to_string(), rec);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), ManifestError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(io_err(path))
    }
}

fn base_dir(manifest_path: &Path) -> &Path {
    manifest_path.parent().unwrap_or(Path::new("."))
}

fn record(manifest_path: &Path, file: &Path) -> Result<FileRecord, ManifestError> {
    let sha256 = file_sha256(file)?;
    let base = base_dir(manifest_path);
    let abs_base = fs::canonicalize(if base.as_os_str().is_empty() {
        Path::new(".")
    } else {
        base
    })
    .map_err(io_err(base))?;
    let abs_file = fs::canonicalize(file).map_err(io_err(file))?;
    let path = abs_file
        .strip_prefix(&abs_base)
        .map(Path::to_path_buf)
        .unwrap_or(abs_file);
    Ok(FileRecord { path, sha256 })
}
