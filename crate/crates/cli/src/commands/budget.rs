//! `budget`: Monte-Carlo infidelity per noise source.

use rydex_atomic::Sr88;
use rydex_core::noise::{noise_budget, BudgetRequest, NoiseBudget, NoiseSource};
use rydex_core::embed_target;
use serde_json::json;

use crate::cli::{BudgetArgs, NoiseArgs};
use crate::commands::Outcome;
use crate::error::{finite, CliError, Result};
use crate::files::{num, Table};
use crate::hardware::{load_hardware, Hardware};
use crate::manifest::manifest_path_for;
use crate::psd_file::load_psd;
use crate::pulse_file::PulseFile;
use crate::units::to_mhz;

/// Hardware with the command-line PSD overrides applied.
pub fn hardware(args: &NoiseArgs, atom: &Sr88) -> Result<Hardware> {
    let mut hw = load_hardware(&args.hardware, atom)?;
    if let Some(p) = &args.phase_psd {
        hw.phase_psd = Some(load_psd(p)?);
    }
    if let Some(p) = &args.intensity_psd {
        hw.intensity_psd = Some(load_psd(p)?);
    }
    Ok(hw)
}

pub fn check_noise_args(args: &NoiseArgs) -> Result<()> {
    if args.shots == 0 {
        return Err(CliError::Usage("--shots must be at least 1".into()));
    }
    if args.substeps == 0 {
        return Err(CliError::Usage("--substeps must be at least 1".into()));
    }
    Ok(())
}

/// Fails early, with the file-level message, when a laser source lacks a PSD.
pub fn check_psds(hw: &Hardware, sources: &[NoiseSource]) -> Result<()> {
    for (src, psd) in [(NoiseSource::LaserPhase, &hw.phase_psd), (NoiseSource::LaserIntensity, &hw.intensity_psd)] {
        if sources.contains(&src) && psd.is_none() {
            return Err(CliError::Config(format!(
                "{src} noise requested but hardware `{}` has no {} PSD (pass --{}-psd)",
                hw.name,
                if src == NoiseSource::LaserPhase { "phase" } else { "intensity" },
                if src == NoiseSource::LaserPhase { "phase" } else { "intensity" },
            )));
        }
    }
    Ok(())
}

/// Budget of `file` on `hw`.
pub fn evaluate(file: &PulseFile, hw: &Hardware, sources: &[NoiseSource], args: &NoiseArgs) -> Result<NoiseBudget> {
    check_psds(hw, sources)?;
    let setup = hw.setup(&file.pulse)?;
    let target = embed_target(file.diagnostics.theta)?;
    let request = BudgetRequest { sources: sources.to_vec(), shots: args.shots, seed: args.seed, substeps: args.substeps };
    let budget = noise_budget(&setup.system, &setup.pulse, &target, &setup.noise, &request)?;
    finite("noise-free infidelity", budget.baseline)?;
    for e in &budget.entries {
        finite(e.source.tag(), e.mean)?;
    }
    Ok(budget)
}

pub fn budget_table(budget: &NoiseBudget) -> Table {
    let mut table = Table::new(["source", "infidelity [1]", "std_error [1]", "shots"]);
    table.push(vec!["noise_free".into(), num(budget.baseline), num(0.0), "0".into()]);
    for e in &budget.entries {
        table.push(vec![e.source.tag().into(), num(e.mean), num(e.std_error), e.shots.to_string()]);
    }
    table
}

pub fn run(args: &BudgetArgs) -> Result<Outcome> {
    check_noise_args(&args.noise)?;
    let atom = Sr88::from_env()?;
    let file = PulseFile::load(&args.pulse)?;
    let hw = hardware(&args.noise, &atom)?;
    let budget = evaluate(&file, &hw, &args.sources.0, &args.noise)?;
    budget_table(&budget).emit(args.out.as_deref())?;

    let mut out = Outcome::default();
    for d in &hw.derived {
        out.warn(format!("hardware `{}`: {d}", hw.name));
    }
    if file.diagnostics.flagged {
        out.warn("pulse is flagged; its stored diagnostics may not apply");
    }
    let v = file.pulse.v_over_omega() * hw.rabi;
    out.summary = json!({
        "hardware": hw.name,
        "v_dipole_mhz": to_mhz(v),
        "separation_um": hw.separation(v) * 1e6,
        "noise_free": budget.baseline,
        "combined": budget.get(NoiseSource::AllCombined).map(|e| e.mean),
        "entries": budget.entries,
    });
    if let Some(p) = &args.out {
        out.outputs.push(p.clone());
        out.manifest = Some(manifest_path_for(p));
    }
    Ok(out)
}
