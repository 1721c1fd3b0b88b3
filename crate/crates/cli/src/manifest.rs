//! Run manifest: the reproducibility record every command emits.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

use crate::config::ConfigFile;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

/// Everything needed to reproduce a run bit-identically: the command, the
/// seed, the fully resolved config (defaults expanded), hashes of the inputs
/// and the list of emitted artifacts. Wall-clock duration is informational
/// and the only field that varies between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: ToolInfo,
    pub command: String,
    pub seed: u64,
    pub config: ConfigFile,
    /// Input path -> sha256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: ConfigFile) -> Self {
        Self {
            tool: ToolInfo {
                name: "rcv".into(),
                version: env!("CARGO_PKG_VERSION").into(),
            },
            command: command.into(),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            duration_seconds: 0.0,
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Io(format!("hashing {}: {e}", path.display())))?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn record_output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("serializing manifest: {e}")))?;
        std::fs::write(path, json + "\n")
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
