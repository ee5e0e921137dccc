use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use dsb_core::diagnostics::Outcome;

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct WriteError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

/// Writes `bytes` to a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), WriteError> {
    let wrap = |source| WriteError {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(wrap)?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    tmp.as_file().sync_all().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictSummary {
    pub probe: String,
    pub check: String,
    pub status: Outcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    #[serde(rename = "dsb-lab")]
    pub cli: &'static str,
    #[serde(rename = "dsb-core")]
    pub core: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub artifacts: Vec<Artifact>,
    pub versions: Versions,
    /// `pass`, `fail`, `inconclusive`, or `none` for commands without verdicts.
    pub outcome: String,
    pub verdicts: Vec<VerdictSummary>,
    pub runtime_seconds: f64,
}

/// Collects artifacts for one run.
pub struct Sink {
    dir: PathBuf,
    pub artifacts: Vec<Artifact>,
}

impl Sink {
    pub fn new(dir: PathBuf) -> Self {
        Self {
            dir,
            artifacts: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn put(&mut self, name: &str, content: &str) -> Result<(), WriteError> {
        write_atomic(&self.dir.join(name), content.as_bytes())?;
        let digest: String = Sha256::digest(content.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: digest,
            bytes: content.len(),
        });
        Ok(())
    }
}
