//! Run manifests: a JSON record of every parameter needed to reproduce a run,
//! plus SHA-256 digests of the produced files. Re-running from the manifest
//! alone regenerates every output bit-identically.

use crate::error::{CliError, CliResult};
use crate::params::{ChernParams, EnsembleRun, FitParams, WalkParams};
use qwalk_core::walk::GrowthPolicy;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

/// One manifest per run; exactly one of the command payloads is present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub walk: Option<WalkParams>,
    pub ensemble: Option<EnsembleRun>,
    pub chern: Option<ChernParams>,
    pub fit: Option<FitParams>,
    pub growth: Option<GrowthPolicy>,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<OutputRecord>,
    pub wall_time: f64,
}

pub fn tool_version() -> String {
    format!("qwalk {}", env!("CARGO_PKG_VERSION"))
}

impl RunManifest {
    pub fn new(command: &str) -> RunManifest {
        RunManifest {
            tool_version: tool_version(),
            command: command.to_string(),
            walk: None,
            ensemble: None,
            chern: None,
            fit: None,
            growth: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_time: 0.0,
        }
    }

    /// Record a produced file (path stored relative to `dir`).
    pub fn record_output(&mut self, dir: &Path, path: &Path) -> CliResult<()> {
        self.outputs.push(OutputRecord {
            path: relative_name(dir, path),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn record_input(&mut self, dir: &Path, path: &Path) -> CliResult<()> {
        self.inputs.push(InputRecord {
            path: relative_name(dir, path),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::resource(format!("manifest encoding failed: {e}")))?;
        std::fs::write(&path, json + "\n")
            .map_err(|e| CliError::resource(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> CliResult<RunManifest> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("malformed manifest {}: {e}", path.display())))
    }
}

fn relative_name(dir: &Path, path: &Path) -> String {
    path.strip_prefix(dir)
        .unwrap_or(path)
        .to_string_lossy()
        .into_owned()
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::resource(format!("cannot hash {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
