//! `continue`: warm-started θ-continuation from a converged pulse.

use serde_json::json;

use rydex_core::grape::{continuation_theta, ContinuationOptions, OptimizationRecord, OptimizationSettings};
use rydex_core::PulseProtocol;

use crate::cli::ContinueArgs;
use crate::commands::Outcome;
use crate::error::{CliError, Result};
use crate::files::{num, Table};
use crate::pulse_file::{settings_digest, PulseFile};

/// RMS difference of the control arrays (`None` when the layouts differ).
pub fn control_distance(a: &PulseProtocol, b: &PulseProtocol) -> Option<f64> {
    let (pa, pb) = (a.parameters(), b.parameters());
    if pa.len() != pb.len() || a.scheme() != b.scheme() || a.modulation() != b.modulation() {
        return None;
    }
    let sq: f64 = pa.iter().zip(&pb).map(|(x, y)| (x - y).powi(2)).sum();
    Some((sq / pa.len() as f64).sqrt())
}

/// Evenly spaced angles after `from`, ending exactly at `to`.
pub fn theta_grid(from: f64, to: f64, steps: usize) -> Vec<f64> {
    (1..=steps).map(|k| if k == steps { to } else { from + (to - from) * k as f64 / steps as f64 }).collect()
}

fn seed_record(file: &PulseFile) -> OptimizationRecord {
    let d = &file.diagnostics;
    OptimizationRecord {
        pulse: file.pulse.clone(),
        theta: d.theta,
        infidelity: d.infidelity,
        cost: d.infidelity,
        t_int: d.t_int,
        t_ryd: d.t_ryd,
        theta_dipole: d.theta_dipole,
        iterations: 0,
        evaluations: 0,
        seed: file.provenance.seed,
        stream: file.provenance.stream,
        converged: d.converged,
        termination: "seed".into(),
        flagged: d.flagged,
    }
}

pub fn run(args: &ContinueArgs) -> Result<Outcome> {
    if args.steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    if !(args.theta_to > 0.0 && args.theta_to <= std::f64::consts::PI + 1e-12) {
        return Err(CliError::Usage("--theta-to must lie in (0, pi]".into()));
    }
    let file = PulseFile::load(&args.pulse)?;
    let seed = seed_record(&file);
    let settings = OptimizationSettings {
        lambda: args.lambda,
        max_iterations: args.max_iterations,
        seed: args.seed,
        ..OptimizationSettings::default()
    };
    let options = ContinuationOptions { threshold: args.threshold, ..ContinuationOptions::default() };
    let thetas = theta_grid(seed.theta, args.theta_to, args.steps);
    let records = continuation_theta(&seed, &thetas, &settings, &options)?;

    let digest = settings_digest(&json!({ "settings": settings, "options": options }));
    let mut out = Outcome::default();
    let mut table = Table::new([
        "step",
        "file",
        "theta [rad]",
        "infidelity [1]",
        "tau_omega [1]",
        "t_ryd_omega [1]",
        "distance_rms [1]",
        "flagged",
    ]);
    let mut previous = seed.pulse.clone();
    let mut max_distance: f64 = 0.0;
    for (k, rec) in records.iter().enumerate() {
        let name = format!("step_{:02}.json", k + 1);
        let path = args.out_dir.join(&name);
        let mut pf = PulseFile::from_record(rec, digest.clone());
        pf.provenance.seed = args.seed;
        pf.save(&path)?;
        out.outputs.push(path);
        let distance = control_distance(&previous, &rec.pulse);
        if let Some(d) = distance {
            max_distance = max_distance.max(d);
        }
        if rec.flagged {
            out.warn(format!("step {} (theta = {}) reached only {:.3e}", k + 1, rec.theta, rec.infidelity));
        }
        table.push(vec![
            (k + 1).to_string(),
            name,
            num(rec.theta),
            num(rec.infidelity),
            num(pf.tau_omega()),
            num(pf.t_ryd_omega()),
            distance.map(num).unwrap_or_default(),
            rec.flagged.to_string(),
        ]);
        previous = rec.pulse.clone();
    }
    let csv = args.out_dir.join("continuation.csv");
    table.write(&csv)?;
    out.outputs.push(csv);
    let worst = records.iter().map(|r| r.infidelity).fold(0.0, f64::max);
    out.summary = json!({
        "steps": records.len(),
        "max_infidelity": worst,
        "max_distance_rms": max_distance,
        "flagged": records.iter().filter(|r| r.flagged).count(),
    });
    out.manifest = Some(args.out_dir.join("manifest.json"));
    Ok(out)
}
