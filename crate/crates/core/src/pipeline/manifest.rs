//! Run manifests: which stages ran, with which seeds, on which bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub seed: u64,
    /// Path to SHA-256, for files read by the stage.
    pub inputs: BTreeMap<String, String>,
    /// Path to SHA-256, for files written by the stage.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl Manifest {
    pub fn new(command: &str, config_digest: String, seed: u64) -> Self {
        Self {
            command: command.into(),
            config_digest,
            seed,
            stages: vec![],
            complete: false,
            failure: None,
        }
    }

    /// Rewrites the manifest in place. It is the one file a run updates.
    pub fn write(&self, path: &Path) -> Result<(), PipelineError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}

pub fn file_digest(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::Input {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Paths are recorded relative to `root` when they live under it.
pub(crate) fn display_path(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

impl StageRecord {
    pub fn new(stage: impl Into<String>, seed: u64) -> Self {
        Self {
            stage: stage.into(),
            seed,
            ..Self::default()
        }
    }

    pub fn input(&mut self, root: &Path, path: &Path) -> Result<(), PipelineError> {
        self.inputs
            .insert(display_path(root, path), file_digest(path)?);
        Ok(())
    }

    pub fn output(&mut self, root: &Path, path: &Path) -> Result<(), PipelineError> {
        self.outputs
            .insert(display_path(root, path), file_digest(path)?);
        Ok(())
    }
}

/// Fails if `path` exists, creating its parent directory otherwise.
pub(crate) fn fresh(path: PathBuf) -> Result<PathBuf, PipelineError> {
    if path.exists() {
        return Err(PipelineError::Exists(path));
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digests_and_refusal() {
        let dir = tempfile::tempdir().unwrap();
        let p = fresh(dir.path().join("a/b.txt")).unwrap();
        std::fs::write(&p, "abc").unwrap();
        assert_eq!(
            file_digest(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(matches!(fresh(p.clone()), Err(PipelineError::Exists(_))));
        let mut s = StageRecord::new("x", 1);
        s.output(dir.path(), &p).unwrap();
        assert!(s.outputs.contains_key("a/b.txt"));
    }
}
