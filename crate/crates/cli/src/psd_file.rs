//! Two-column PSD files.
//!
//! ```text
//! # kind: phase
//! # frequency [Hz], density [rad^2/Hz]
//! 0 1e-10
//! 1e5 8e-11
//! ```
//!
//! Intensity files declare `# kind: intensity` and give the relative
//! intensity noise density in 1/Hz. Columns may be separated by whitespace
//! or a comma.

use std::path::Path;

use rydex_core::noise::{PsdKind, PsdTable};

use crate::error::{CliError, Result};
use crate::files::write_atomic;

pub fn parse_psd(text: &str) -> Result<PsdTable> {
    let mut kind = None;
    let mut f = Vec::new();
    let mut s = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("kind:") {
                kind = Some(match v.trim() {
                    "phase" => PsdKind::Phase,
                    "intensity" => PsdKind::Intensity,
                    other => return Err(CliError::Config(format!("line {}: unknown PSD kind `{other}`", i + 1))),
                });
            }
            continue;
        }
        let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()).collect();
        if cols.len() != 2 {
            return Err(CliError::Config(format!("line {}: expected two columns", i + 1)));
        }
        let parse = |c: &str| c.parse::<f64>().map_err(|_| CliError::Config(format!("line {}: bad number `{c}`", i + 1)));
        f.push(parse(cols[0])?);
        s.push(parse(cols[1])?);
    }
    let kind = kind.ok_or_else(|| CliError::Config("PSD file lacks a `# kind: phase|intensity` header".into()))?;
    Ok(PsdTable::new(kind, f, s)?)
}

pub fn load_psd(path: &Path) -> Result<PsdTable> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_psd(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn format_psd(psd: &PsdTable) -> String {
    let (kind, unit) = match psd.kind {
        PsdKind::Phase => ("phase", "rad^2/Hz"),
        PsdKind::Intensity => ("intensity", "1/Hz"),
    };
    let mut out = format!("# kind: {kind}\n# frequency [Hz], density [{unit}]\n");
    for (f, s) in psd.frequencies().iter().zip(psd.densities()) {
        out.push_str(&format!("{f} {s}\n"));
    }
    out
}

pub fn save_psd(path: &Path, psd: &PsdTable) -> Result<()> {
    write_atomic(path, format_psd(psd).as_bytes())
}
