//! `select`: filter, rank and pick extremal pulses from a library.

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::cli::{RankBy, SelectArgs};
use crate::commands::Outcome;
use crate::error::{CliError, Result};
use crate::files::{num, write_atomic, Table};
use crate::manifest::manifest_path_for;
use crate::pulse_file::PulseFile;

#[derive(Clone, Debug)]
pub struct Entry {
    pub path: PathBuf,
    pub file: PulseFile,
    pub t_int_v: f64,
    pub t_ryd_omega: f64,
    pub tau_omega: f64,
}

impl Entry {
    pub fn new(path: PathBuf, file: PulseFile) -> Self {
        Entry { t_int_v: file.t_int_v(), t_ryd_omega: file.t_ryd_omega(), tau_omega: file.tau_omega(), path, file }
    }

    pub fn key(&self, by: RankBy) -> f64 {
        match by {
            RankBy::TRyd => self.t_ryd_omega,
            RankBy::TIntV => self.t_int_v,
            RankBy::Tau => self.tau_omega,
            RankBy::Infidelity => self.file.diagnostics.infidelity,
        }
    }
}

/// Pulse files named directly or found (non-recursively) in directories,
/// in sorted order. Manifests and other JSON are skipped.
pub fn collect_library(paths: &[PathBuf]) -> Result<Vec<Entry>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json") && !is_manifest(f))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    files.into_iter().map(|f| PulseFile::load(&f).map(|pf| Entry::new(f, pf))).collect()
}

fn is_manifest(p: &Path) -> bool {
    p.file_name().is_some_and(|n| n.to_string_lossy().ends_with("manifest.json"))
}

/// Entries not dominated in (T_int·V, T_ryd·Ω, τΩ) by any other entry.
pub fn pareto_front(entries: &[Entry]) -> Vec<bool> {
    let coords = |e: &Entry| [e.t_int_v, e.t_ryd_omega, e.tau_omega];
    entries
        .iter()
        .map(|a| {
            let ca = coords(a);
            !entries.iter().any(|b| {
                let cb = coords(b);
                cb.iter().zip(&ca).all(|(x, y)| x <= y) && cb.iter().zip(&ca).any(|(x, y)| x < y)
            })
        })
        .collect()
}

pub fn filter_and_rank(entries: Vec<Entry>, args: &SelectArgs) -> Vec<Entry> {
    let within = |v: f64, bound: Option<f64>| bound.is_none_or(|b| v <= b);
    let mut kept: Vec<Entry> = entries
        .into_iter()
        .filter(|e| {
            within(e.file.diagnostics.infidelity, args.max_infidelity)
                && within(e.t_int_v, args.max_tint_v)
                && within(e.t_ryd_omega, args.max_tryd_omega)
                && within(e.tau_omega, args.max_tau_omega)
        })
        .collect();
    kept.sort_by(|a, b| {
        a.key(args.rank_by)
            .total_cmp(&b.key(args.rank_by))
            .then(a.file.diagnostics.infidelity.total_cmp(&b.file.diagnostics.infidelity))
            .then(a.path.cmp(&b.path))
    });
    kept
}

pub fn run(args: &SelectArgs) -> Result<Outcome> {
    let library = collect_library(&args.library)?;
    if library.is_empty() {
        return Err(CliError::Usage("the pulse library is empty".into()));
    }
    let total = library.len();
    let mut ranked = filter_and_rank(library, args);
    if let Some(top) = args.top {
        ranked.truncate(top);
    }
    let pareto = pareto_front(&ranked);
    let mut table = Table::new([
        "rank",
        "file",
        "infidelity [1]",
        "t_int_v [rad]",
        "t_ryd_omega [1]",
        "tau_omega [1]",
        "v_over_omega [1]",
        "theta [rad]",
        "pareto",
    ]);
    for (i, e) in ranked.iter().enumerate() {
        table.push(vec![
            (i + 1).to_string(),
            e.path.display().to_string(),
            num(e.file.diagnostics.infidelity),
            num(e.t_int_v),
            num(e.t_ryd_omega),
            num(e.tau_omega),
            num(e.file.pulse.v_over_omega()),
            num(e.file.diagnostics.theta),
            pareto[i].to_string(),
        ]);
    }
    table.emit(args.out.as_deref())?;

    let mut out = Outcome::default();
    if ranked.is_empty() {
        out.warn(format!("no pulse of {total} passes the filters"));
    }
    let pick = |key: fn(&Entry) -> f64| {
        ranked.iter().min_by(|a, b| key(a).total_cmp(&key(b))).map(|e| e.path.display().to_string())
    };
    out.summary = json!({
        "library": total,
        "selected": ranked.len(),
        "best": ranked.first().map(|e| e.path.display().to_string()),
        "min_t_int_v": pick(|e| e.t_int_v),
        "min_t_ryd_omega": pick(|e| e.t_ryd_omega),
        "min_tau_omega": pick(|e| e.tau_omega),
        "pareto": ranked.iter().zip(&pareto).filter(|(_, p)| **p).map(|(e, _)| e.path.display().to_string()).collect::<Vec<_>>(),
    });
    if let Some(dest) = &args.copy_best {
        match ranked.first() {
            Some(best) => {
                let bytes = std::fs::read(&best.path).map_err(|e| CliError::io(&best.path, e))?;
                write_atomic(dest, &bytes)?;
                out.outputs.push(dest.clone());
            }
            None => out.warn("nothing to copy"),
        }
    }
    if let Some(p) = &args.out {
        out.outputs.push(p.clone());
        out.manifest = Some(manifest_path_for(p));
    } else if let Some(dest) = &args.copy_best {
        out.manifest = Some(manifest_path_for(dest));
    }
    Ok(out)
}
