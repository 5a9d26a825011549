pub mod atomic;
pub mod budget;
pub mod continuation;
pub mod frt;
pub mod optimize;
pub mod rescale;
pub mod select;
pub mod sensitivity;

use std::path::PathBuf;

use serde_json::Value;

/// What a command produced; the caller turns it into a manifest.
#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub summary: Value,
    /// Where the manifest goes; `None` for stdout-only runs.
    pub manifest: Option<PathBuf>,
}

impl Outcome {
    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}
