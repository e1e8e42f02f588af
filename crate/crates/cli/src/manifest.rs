use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

/// What a run did: resolved configuration, seed and the SHA-256 of every
/// artifact, keyed by path relative to the output directory.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub artifacts: BTreeMap<String, String>,
}

/// Output directory that hashes everything written through it.
pub struct Outputs {
    root: PathBuf,
    artifacts: BTreeMap<String, String>,
}

impl Outputs {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `bytes` to `rel` (a `/`-separated relative path).
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.artifacts
            .insert(rel.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    /// Records a file some other routine already wrote under the root.
    pub fn record(&mut self, rel: &str) -> Result<(), CliError> {
        let path = self.root.join(rel);
        let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        self.artifacts
            .insert(rel.to_string(), hex::encode(Sha256::digest(&bytes)));
        Ok(())
    }

    /// Writes `manifest.json` and returns its path.
    pub fn finish(
        self,
        command: &str,
        seed: u64,
        config: BTreeMap<String, String>,
    ) -> Result<PathBuf, CliError> {
        let m = Manifest {
            command: command.to_string(),
            seed,
            config,
            artifacts: self.artifacts,
        };
        let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        text.push('\n');
        let path = self.root.join(MANIFEST_NAME);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashes_written_and_recorded_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::create(dir.path()).unwrap();
        out.write("a/b.txt", b"abc").unwrap();
        fs::write(dir.path().join("c.txt"), b"").unwrap();
        out.record("c.txt").unwrap();
        let path = out.finish("test", 4, BTreeMap::new()).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&fs::read(path).unwrap()).unwrap();
        assert_eq!(v["seed"], 4);
        assert_eq!(
            v["artifacts"]["a/b.txt"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(
            v["artifacts"]["c.txt"],
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
