//! Artifact writing and the hash manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ArtifactEntry {
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub artifacts: BTreeMap<String, ArtifactEntry>,
}

/// Output directory that records every file written through it.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    artifacts: BTreeMap<String, ArtifactEntry>,
}

impl OutDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(Self {
            root,
            artifacts: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `name` (a relative path with `/` separators).
    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.artifacts.insert(
            name.to_string(),
            ArtifactEntry {
                sha256: sha256_hex(contents),
                bytes: contents.len() as u64,
            },
        );
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable artifact");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Records the files of a finished sub-run under `prefix/`.
    pub fn absorb(&mut self, prefix: &str, manifest: &Manifest) {
        for (name, entry) in &manifest.artifacts {
            self.artifacts.insert(format!("{prefix}/{name}"), entry.clone());
        }
    }

    /// Writes `manifest.json` and returns it.
    pub fn finish(self, command: &str, seed: u64) -> Result<Manifest> {
        let manifest = Manifest {
            command: command.to_string(),
            seed,
            artifacts: self.artifacts,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
        text.push('\n');
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Seventeen significant digits, no locale.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-joined CSV with a header row.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}
