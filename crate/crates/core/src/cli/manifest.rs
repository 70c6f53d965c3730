use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::formats::{read_text, sha256_hex, write_atomic};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Record of one CLI run. The `config` field is the fully resolved
/// configuration and is enough to re-run the command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: serde_json::to_value(config).map_err(|e| Error::data(e.to_string()))?,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_time_s: 0.0,
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.inputs.push(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Writes an output file atomically and records its digest.
    pub fn write_output(&mut self, path: &Path, contents: &[u8]) -> Result<()> {
        write_atomic(path, contents)?;
        self.outputs.push(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_hex(contents),
        });
        Ok(())
    }

    /// Fails if any recorded input is missing or no longer matches its digest.
    pub fn verify_inputs(&self) -> Result<()> {
        for input in &self.inputs {
            let bytes = std::fs::read(&input.path).map_err(|source| Error::Io {
                path: input.path.display().to_string(),
                source,
            })?;
            if sha256_hex(&bytes) != input.sha256 {
                return Err(Error::data(format!(
                    "{} changed since the run was recorded",
                    input.path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| Error::data(e.to_string()))?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&read_text(path)?)
            .map_err(|e| Error::data(format!("{}: not a run manifest: {e}", path.display())))
    }
}
