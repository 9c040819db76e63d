//! Run manifests: every subcommand records its resolved configuration,
//! seed, and artifact hashes under the output directory. Canonical
//! artifacts (everything deterministic for a given seed) carry sha256
//! digests; machine-dependent ones (timing JSON) are listed without one.
//! Re-running `eval`/`gen` from a manifest reproduces the canonical
//! artifacts byte for byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use jamsentry::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub bytes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub artifacts: Vec<ArtifactEntry>,
}

pub struct ManifestBuilder {
    out_dir: PathBuf,
    manifest: Manifest,
}

impl ManifestBuilder {
    pub fn new(out_dir: &Path, command: &str, seed: u64, config: Value) -> Self {
        Self {
            out_dir: out_dir.to_path_buf(),
            manifest: Manifest {
                tool: "jamsentry".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                seed,
                config,
                artifacts: Vec::new(),
            },
        }
    }

    /// Register a file below the output directory, hashing it when
    /// `canonical` is set.
    pub fn add_artifact(&mut self, path: &Path, canonical: bool) -> Result<()> {
        let bytes = std::fs::read(path)?;
        let rel = path
            .strip_prefix(&self.out_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned();
        self.manifest.artifacts.push(ArtifactEntry {
            path: rel,
            bytes: bytes.len() as u64,
            sha256: canonical.then(|| hex_digest(&bytes)),
        });
        Ok(())
    }

    pub fn write(mut self) -> Result<PathBuf> {
        self.manifest.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let path = self.out_dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| Error::Format(format!("manifest encode: {e}")))?;
        std::fs::write(&path, json)?;
        Ok(path)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let bytes = std::fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Format(format!("manifest {}: {e}", path.display())))
}
