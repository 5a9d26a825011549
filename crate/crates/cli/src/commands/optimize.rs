//! `optimize` and `sweep`.

use serde_json::json;

use rydex_core::grape::{
    detect_speed_limit, landscape_sweep, optimize, Ansatz, GateProblem, OptimizationRecord, OptimizationSettings,
    SweepSpec,
};
use rydex_core::embed_target;

use crate::cli::{OptimizeArgs, OptimizerArgs, SweepArgs};
use crate::commands::Outcome;
use crate::error::{CliError, Result};
use crate::files::{num, Table};
use crate::manifest::manifest_path_for;
use crate::pulse_file::{settings_digest, PulseFile};

/// Settings of one optimisation run. Sweeps and single optimisations share
/// them, so a one-point sweep carries the same digest as `optimize`.
pub fn settings(opt: &OptimizerArgs, restarts: usize, target: Option<f64>) -> OptimizationSettings {
    OptimizationSettings {
        lambda: opt.lambda,
        restarts,
        max_iterations: opt.max_iterations,
        seed: opt.seed,
        target_infidelity: target,
        ..OptimizationSettings::default()
    }
}

fn check(opt: &OptimizerArgs) -> Result<()> {
    if opt.segments < 2 {
        return Err(CliError::Usage("--segments must be at least 2".into()));
    }
    if !(opt.lambda.is_finite() && opt.lambda >= 0.0) {
        return Err(CliError::Usage("--lambda must be non-negative".into()));
    }
    if !(opt.theta > 0.0 && opt.theta <= std::f64::consts::PI + 1e-12) {
        return Err(CliError::Usage("--theta must lie in (0, pi]".into()));
    }
    Ok(())
}

fn check_grid(name: &str, values: &[f64], allow_zero: bool) -> Result<()> {
    if values.is_empty() {
        return Err(CliError::Usage(format!("--{name} needs at least one value")));
    }
    for &v in values {
        if !(v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0))) {
            return Err(CliError::Usage(format!("--{name} value {v} is out of range")));
        }
    }
    Ok(())
}

pub fn run_optimize(args: &OptimizeArgs) -> Result<Outcome> {
    check(&args.opt)?;
    check_grid("tau-omega", &[args.tau_omega], false)?;
    check_grid("v-over-omega", &[args.v_over_omega], true)?;
    if args.restarts == 0 {
        return Err(CliError::Usage("--restarts must be at least 1".into()));
    }
    let settings = settings(&args.opt, args.restarts, args.target_infidelity);
    let problem = GateProblem::normalized(
        args.opt.scheme,
        args.opt.modulation,
        args.tau_omega,
        args.v_over_omega,
        args.opt.segments,
        embed_target(args.opt.theta)?,
    )?;
    let rec = optimize(&problem, &settings, &Ansatz::Random)?;
    let file = PulseFile::from_record(&rec, settings_digest(&single_run(&settings)));
    file.save(&args.out)?;
    log::info!("infidelity {:.3e} after {} iterations (stream {})", rec.infidelity, rec.iterations, rec.stream);
    let mut out = Outcome {
        outputs: vec![args.out.clone()],
        summary: record_summary(&rec),
        manifest: Some(manifest_path_for(&args.out)),
        ..Outcome::default()
    };
    if !rec.converged {
        out.warn(format!("optimizer stopped without convergence: {}", rec.termination));
    }
    Ok(out)
}

/// Every stored pulse is the result of one run; the restart count and early
/// stop only decide which run is kept.
fn single_run(s: &OptimizationSettings) -> OptimizationSettings {
    OptimizationSettings { restarts: 1, target_infidelity: None, ..s.clone() }
}

fn record_summary(rec: &OptimizationRecord) -> serde_json::Value {
    json!({
        "infidelity": rec.infidelity,
        "tau_omega": rec.tau_omega(),
        "v_over_omega": rec.v_over_omega(),
        "t_ryd_omega": rec.t_ryd_omega(),
        "theta_dipole": rec.theta_dipole,
        "iterations": rec.iterations,
        "stream": rec.stream,
        "converged": rec.converged,
    })
}

pub fn landscape_headers() -> Vec<&'static str> {
    vec![
        "file",
        "tau_omega [rad]",
        "v_over_omega [1]",
        "seed",
        "stream",
        "infidelity [1]",
        "t_int_omega [1]",
        "t_ryd_omega [1]",
        "theta_dipole [rad]",
        "converged",
    ]
}

pub fn run_sweep(args: &SweepArgs) -> Result<Outcome> {
    check(&args.opt)?;
    check_grid("tau-omega", &args.tau_omega, false)?;
    check_grid("v-over-omega", &args.v_over_omega, true)?;
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let settings = settings(&args.opt, 1, None);
    let digest = settings_digest(&settings);
    let spec = SweepSpec {
        scheme: args.opt.scheme,
        modulation: args.opt.modulation,
        segments: args.opt.segments,
        theta: args.opt.theta,
        durations: args.tau_omega.clone(),
        v_over_omega: args.v_over_omega.clone(),
        runs_per_point: args.runs,
    };
    let records = landscape_sweep(&spec, &settings)?;
    let mut out = Outcome::default();
    let mut table = Table::new(landscape_headers());
    let pulse_dir = args.out_dir.join("pulses");
    for (task, rec) in records.iter().enumerate() {
        // The problem's grid values, not the pulse's own Ω scale.
        let runs = args.runs;
        let nv = args.v_over_omega.len();
        let tau = args.tau_omega[task / (runs * nv)];
        let v = args.v_over_omega[(task / runs) % nv];
        let name = format!("p{task:05}.json");
        let path = pulse_dir.join(&name);
        PulseFile::from_record(rec, digest.clone()).save(&path)?;
        out.outputs.push(path);
        table.push(vec![
            format!("pulses/{name}"),
            num(tau),
            num(v),
            rec.seed.to_string(),
            rec.stream.to_string(),
            num(rec.infidelity),
            num(rec.t_int * rec.pulse.omega0()),
            num(rec.t_ryd_omega()),
            num(rec.theta_dipole),
            rec.converged.to_string(),
        ]);
    }
    let landscape = args.out_dir.join("landscape.csv");
    table.write(&landscape)?;
    out.outputs.push(landscape);

    // Speed limit per V/Ω column.
    let mut limits = Vec::new();
    for &v in &args.v_over_omega {
        let column: Vec<OptimizationRecord> = records
            .iter()
            .enumerate()
            .filter(|(task, _)| args.v_over_omega[(task / args.runs) % args.v_over_omega.len()] == v)
            .map(|(task, r)| {
                // Group by the grid duration so Rabi pulses (rescaled to their own max Ω) bin correctly.
                let mut r = r.clone();
                let tau = args.tau_omega[task / (args.runs * args.v_over_omega.len())];
                r.pulse = r.pulse.with_duration(tau).expect("grid durations are positive");
                r
            })
            .collect();
        let limit = detect_speed_limit(&column, args.limit_below, args.limit_above);
        if limit.is_none() {
            out.warn(format!("no speed limit detected at V/Omega = {v}"));
        }
        limits.push(json!({ "v_over_omega": v, "tau_omega": limit }));
    }
    let best = records.iter().map(|r| r.infidelity).fold(f64::INFINITY, f64::min);
    out.summary = json!({ "records": records.len(), "best_infidelity": best, "speed_limit": limits });
    out.manifest = Some(args.out_dir.join("manifest.json"));
    Ok(out)
}
