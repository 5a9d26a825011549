use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::cli::Command;
use crate::error::{CliError, Result};
use crate::files::{read_json, write_json};
use crate::pulse_file::TOOL_VERSION;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Record of one command invocation. `config` holds the fully resolved
/// arguments, so replaying it reproduces every deterministic output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub config: Command,
    pub master_seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// Command-specific results worth keeping next to the outputs.
    pub summary: serde_json::Value,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub wall_seconds: f64,
}

impl RunManifest {
    pub fn new(config: &Command, started: SystemTime) -> Self {
        RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            command: config.name().to_string(),
            config: config.clone(),
            master_seed: config.seed(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            summary: serde_json::Value::Null,
            started: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            wall_seconds: started.elapsed().map(|d| d.as_secs_f64()).unwrap_or(0.0),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let value: serde_json::Value = read_json(path)?;
        if value.get("schema_version").and_then(|v| v.as_u64()) != Some(MANIFEST_SCHEMA_VERSION as u64) {
            return Err(CliError::Config(format!("{}: unsupported manifest schema", path.display())));
        }
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// `pulse.json` → `pulse.manifest.json`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    output.with_file_name(format!("{stem}.manifest.json"))
}
