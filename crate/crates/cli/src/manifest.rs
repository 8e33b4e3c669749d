//! Run manifests: the one place a timestamp is allowed. Every command
//! writes `<output stem>.manifest.json` beside its primary output so a
//! result can be traced back to its exact inputs and parameters.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use instrux_core::error::{Error, Result};
use instrux_core::util::{file_sha256, sha256_hex};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Hash of the resolved parameter set, for config-drift detection.
    pub params_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend_profile: Option<String>,
    pub seed: u64,
    /// Input path -> content hash.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub version: String,
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(command: &str, params: &Value, backend_profile: Option<&str>, seed: u64) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            params_sha256: sha256_hex(params.to_string().as_bytes()),
            backend_profile: backend_profile.map(str::to_string),
            seed,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_sha256(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Write the manifest next to `primary_output` and return its path.
    pub fn write(&self, primary_output: &Path) -> Result<PathBuf> {
        let path = manifest_path(primary_output);
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::json("run manifest", e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub fn manifest_path(primary_output: &Path) -> PathBuf {
    let stem = primary_output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    primary_output.with_file_name(format!("{stem}.manifest.json"))
}
