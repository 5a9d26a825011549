//! `atomic`: lifetime, energy, C₃ and scaling reports.

use serde_json::json;

use rydex_atomic::constants::IONIZATION_GHZ;
use rydex_atomic::{AtomicError, Coverage, ScalingAnchors, Series, Sr88};

use crate::cli::{AtomicArgs, AtomicCommon, AtomicReport};
use crate::commands::Outcome;
use crate::error::{CliError, Result};
use crate::files::{num, Table};
use crate::hardware::decay_at;
use crate::manifest::manifest_path_for;
use crate::units::{c3_to_mhz_um3, to_khz};

fn coverage_note(c: &Coverage) -> String {
    let list = |v: &[(Series, u32)]| v.iter().map(|(s, n)| format!("{s}{n}")).collect::<Vec<_>>().join(" ");
    match (c.missing.is_empty(), c.placeholder.is_empty()) {
        (true, true) => "exact".into(),
        (true, false) => format!("placeholder: {}", list(&c.placeholder)),
        _ => format!("missing: {}; placeholder: {}", list(&c.missing), list(&c.placeholder)),
    }
}

struct Report {
    table: Table,
    gaps: usize,
    rows: usize,
}

impl Report {
    fn new(headers: &[&str]) -> Self {
        Report { table: Table::new(headers.iter().copied()), gaps: 0, rows: 0 }
    }

    /// Adds a row, or a flagged empty row when the atomic data has a gap.
    fn add(&mut self, n: u32, out: &mut Outcome, row: std::result::Result<Vec<String>, AtomicError>) -> Result<()> {
        self.rows += 1;
        let width = self.table.headers.len();
        match row {
            Ok(mut cells) => {
                cells.insert(0, n.to_string());
                cells.push("false".into());
                self.table.push(cells);
            }
            Err(e @ AtomicError::DataGap { .. }) => {
                self.gaps += 1;
                out.warn(format!("n = {n}: {e}"));
                let mut cells = vec![n.to_string()];
                cells.resize(width - 1, String::new());
                cells.push("true".into());
                self.table.push(cells);
            }
            Err(e) => return Err(e.into()),
        }
        Ok(())
    }
}

fn lifetime(atom: &Sr88, series: Series, n: u32, channels: usize) -> std::result::Result<Vec<String>, AtomicError> {
    let r = atom.decay_rate(series, n)?;
    let mut strongest = r.channels.clone();
    strongest.sort_by(|a, b| b.rate.total_cmp(&a.rate));
    let list = strongest
        .iter()
        .take(channels)
        .map(|c| format!("{}{}J{}:{:.4}", c.lower.series, c.lower.n, c.lower.j, c.rate / r.rate))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(vec![
        num(r.lifetime * 1e6),
        num(r.linewidth_hz() / 1e3),
        r.channels.len().to_string(),
        list,
        coverage_note(&r.coverage),
    ])
}

fn energy(atom: &Sr88, series: Series, n: u32) -> std::result::Result<Vec<String>, AtomicError> {
    let qd = atom.quantum_defect(series, n)?;
    let e = atom.level_energy(series, n)?;
    let n_star = atom.model().effective_n(series, n)?;
    Ok(vec![
        num(qd.delta),
        num(n_star),
        num(e),
        num(IONIZATION_GHZ - e),
        format!("{:?}", qd.origin).to_lowercase(),
    ])
}

fn c3(atom: &Sr88, n: u32) -> std::result::Result<Vec<String>, AtomicError> {
    let laws = atom.scaling_laws(n, &ScalingAnchors::default())?;
    let dip = atom.c3_from_dipoles(n)?;
    Ok(vec![num(c3_to_mhz_um3(laws.c3)), num(c3_to_mhz_um3(dip))])
}

fn scaling(atom: &Sr88, n: u32) -> std::result::Result<Vec<String>, AtomicError> {
    let laws = atom.scaling_laws(n, &ScalingAnchors::default())?;
    let (gr, grp) = decay_at(atom, n).map_err(|e| match e {
        CliError::DataGap(_) => AtomicError::DataGap { series: Series::S1, n },
        other => AtomicError::Parameter(other.to_string()),
    })?;
    Ok(vec![
        num(c3_to_mhz_um3(laws.c3)),
        num(laws.rabi_factor),
        num(laws.wavelength * 1e9),
        num(laws.k_eff_factor),
        num((n as f64 / 61.0).powi(2)),
        num(to_khz(gr)),
        num(to_khz(grp)),
        coverage_note(&laws.coverage_r),
        coverage_note(&laws.coverage_rp),
    ])
}

pub fn run(args: &AtomicArgs) -> Result<Outcome> {
    let atom = Sr88::from_env()?;
    let mut out = Outcome::default();
    let (report, common): (Report, &AtomicCommon) = match &args.report {
        AtomicReport::Lifetime { series, common, channels } => {
            let mut r = Report::new(&[
                "n",
                "lifetime [us]",
                "linewidth [kHz]",
                "channels",
                "strongest [fraction]",
                "coverage",
                "flagged",
            ]);
            for &n in &common.n.0 {
                r.add(n, &mut out, lifetime(&atom, *series, n, *channels))?;
            }
            (r, common)
        }
        AtomicReport::Energy { series, common } => {
            let mut r = Report::new(&["n", "defect [1]", "n_star [1]", "energy [GHz]", "binding [GHz]", "origin", "flagged"]);
            for &n in &common.n.0 {
                r.add(n, &mut out, energy(&atom, *series, n))?;
            }
            (r, common)
        }
        AtomicReport::C3 { common } => {
            let mut r = Report::new(&["n", "c3_scaled [2pi MHz um^3]", "c3_dipole [2pi MHz um^3]", "flagged"]);
            for &n in &common.n.0 {
                r.add(n, &mut out, c3(&atom, n))?;
            }
            (r, common)
        }
        AtomicReport::Scaling { common } => {
            let mut r = Report::new(&[
                "n",
                "c3 [2pi MHz um^3]",
                "rabi_factor [1]",
                "wavelength [nm]",
                "k_factor_wavelength [1]",
                "k_factor_power_law [1]",
                "gamma_r [2pi kHz]",
                "gamma_rp [2pi kHz]",
                "coverage_r",
                "coverage_rp",
                "flagged",
            ]);
            for &n in &common.n.0 {
                r.add(n, &mut out, scaling(&atom, n))?;
            }
            (r, common)
        }
    };
    report.table.emit(common.out.as_deref())?;
    out.summary = json!({ "rows": report.rows, "data_gaps": report.gaps });
    if let Some(p) = &common.out {
        out.outputs.push(p.clone());
        out.manifest = Some(manifest_path_for(p));
    }
    if report.gaps == report.rows {
        return Err(CliError::DataGap(format!("no requested level is covered by the atomic data ({} rows)", report.rows)));
    }
    Ok(out)
}
