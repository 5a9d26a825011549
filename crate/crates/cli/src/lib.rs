//! Command-line surface of the pulse lab: persistence of pulses and run
//! manifests, landscape sweeps, pulse selection, noise budgets, response
//! functions, hardware sensitivity sweeps and atomic-data reports.
//!
//! Every command that writes files also writes a [`manifest::RunManifest`]
//! holding its resolved arguments; `rydex replay --manifest` re-runs it.

pub mod cli;
pub mod commands;
pub mod error;
pub mod files;
pub mod hardware;
pub mod manifest;
pub mod psd_file;
pub mod pulse_file;
pub mod units;

use std::path::PathBuf;
use std::time::SystemTime;

use cli::Command;
use commands::Outcome;
use error::{CliError, Result};
use manifest::RunManifest;

/// Runs `command` and writes its manifest. Returns the manifest path when one
/// was written.
pub fn execute(command: &Command) -> Result<Option<PathBuf>> {
    let started = SystemTime::now();
    // A replay rewrites the manifest it came from with the recorded command,
    // so it can be replayed again.
    let replayed;
    let command = match command {
        Command::Replay(a) => {
            let recorded = RunManifest::load(&a.manifest)?;
            if matches!(recorded.config, Command::Replay(_)) {
                return Err(CliError::Config("a manifest cannot record a replay".into()));
            }
            if recorded.tool_version != pulse_file::TOOL_VERSION {
                log::warn!("manifest written by version {}, replaying with {}", recorded.tool_version, pulse_file::TOOL_VERSION);
            }
            replayed = recorded.config;
            &replayed
        }
        other => other,
    };
    let outcome = dispatch(command)?;
    let Some(path) = outcome.manifest.clone() else {
        return Ok(None);
    };
    let mut manifest = RunManifest::new(command, started);
    manifest.outputs = outcome.outputs;
    manifest.warnings = outcome.warnings;
    manifest.summary = outcome.summary;
    manifest.save(&path)?;
    Ok(Some(path))
}

fn dispatch(command: &Command) -> Result<Outcome> {
    match command {
        Command::Optimize(a) => commands::optimize::run_optimize(a),
        Command::Sweep(a) => commands::optimize::run_sweep(a),
        Command::Select(a) => commands::select::run(a),
        Command::Budget(a) => commands::budget::run(a),
        Command::Frt(a) => commands::frt::run(a),
        Command::Sensitivity(a) => commands::sensitivity::run(a),
        Command::Rescale(a) => commands::rescale::run(a),
        Command::Atomic(a) => commands::atomic::run(a),
        Command::Continue(a) => commands::continuation::run(a),
        Command::Replay(_) => Err(CliError::Config("nested replay".into())),
    }
}
