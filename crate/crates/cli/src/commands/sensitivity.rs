//! `sensitivity`: budget curves while one hardware parameter varies.

use serde_json::json;

use rydex_atomic::{ScalingAnchors, Sr88};

use crate::cli::{KScaling, Parameter, SensitivityArgs};
use crate::commands::budget::{budget_table, check_noise_args, check_psds, evaluate, hardware};
use crate::commands::Outcome;
use crate::error::{CliError, Result};
use crate::files::{num, Table};
use crate::hardware::{c3_at, decay_at, Hardware};
use crate::manifest::manifest_path_for;
use crate::pulse_file::PulseFile;
use crate::units::{khz, mhz, to_mhz};

/// `base` with one parameter replaced, including the coupled n-scalings.
pub fn vary(base: &Hardware, parameter: Parameter, value: f64, k_scaling: KScaling, atom: &Sr88) -> Result<Hardware> {
    let mut hw = base.clone();
    let positive = |v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::Usage(format!("grid value {v} must be positive")))
        }
    };
    match parameter {
        Parameter::Omega => hw.rabi = mhz(positive(value)?),
        Parameter::OmegaXy => hw.omega_xy = khz(positive(value)?),
        Parameter::OmegaZ => hw.omega_z = khz(positive(value)?),
        Parameter::Temperature => {
            if !(value.is_finite() && value >= 0.0) {
                return Err(CliError::Usage(format!("temperature {value} must be non-negative")));
            }
            hw.temperature = value * 1e-6;
            hw.zero_temperature = value == 0.0;
        }
        Parameter::N => {
            if value.fract() != 0.0 || !(1.0..=1000.0).contains(&value) {
                return Err(CliError::Usage(format!("n = {value} is not a valid principal number")));
            }
            let n = value as u32;
            let anchors = ScalingAnchors::default();
            let here = atom.scaling_laws(n, &anchors)?;
            let there = atom.scaling_laws(base.n, &anchors)?;
            hw.n = n;
            hw.c3 = c3_at(atom, n)?;
            hw.rabi = base.rabi * here.rabi_factor / there.rabi_factor;
            (hw.gamma_r, hw.gamma_rp) = decay_at(atom, n)?;
            hw.k_eff = match k_scaling {
                KScaling::PowerLaw => base.k_eff * (n as f64 / base.n as f64).powi(2),
                KScaling::Wavelength => base.k_eff * here.k_eff_factor / there.k_eff_factor,
            };
        }
    }
    Ok(hw)
}

pub fn run(args: &SensitivityArgs) -> Result<Outcome> {
    check_noise_args(&args.noise)?;
    if args.grid.is_empty() {
        return Err(CliError::Usage("--grid needs at least one value".into()));
    }
    let atom = Sr88::from_env()?;
    let file = PulseFile::load(&args.pulse)?;
    let base = hardware(&args.noise, &atom)?;
    check_psds(&base, &args.sources.0)?;

    let mut out = Outcome::default();
    let mut table = Table::new([
        args.vary.header(),
        "source",
        "infidelity [1]",
        "std_error [1]",
        "omega [2pi MHz]",
        "v_dipole [2pi MHz]",
        "separation [um]",
        "flagged",
        "note",
    ]);
    let mut curves = Vec::new();
    for &value in &args.grid {
        let hw = match vary(&base, args.vary, value, args.k_scaling, &atom) {
            Ok(hw) => hw,
            Err(CliError::DataGap(msg)) => {
                out.warn(format!("{} = {value}: {msg}", args.vary.header()));
                table.push(vec![num(value), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), "true".into(), msg]);
                curves.push(json!({ "value": value, "flagged": true }));
                continue;
            }
            Err(e) => return Err(e),
        };
        let budget = evaluate(&file, &hw, &args.sources.0, &args.noise)?;
        let v = file.pulse.v_over_omega() * hw.rabi;
        let context = [num(to_mhz(hw.rabi)), num(to_mhz(v)), num(hw.separation(v) * 1e6)];
        for row in budget_table(&budget).rows {
            let mut full = vec![num(value), row[0].clone(), row[1].clone(), row[2].clone()];
            full.extend(context.iter().cloned());
            full.extend(["false".to_string(), String::new()]);
            table.push(full);
        }
        curves.push(json!({ "value": value, "flagged": false, "noise_free": budget.baseline, "entries": budget.entries }));
    }
    table.emit(args.out.as_deref())?;
    out.summary = json!({ "parameter": args.vary, "hardware": base.name, "curves": curves });
    if let Some(p) = &args.out {
        out.outputs.push(p.clone());
        out.manifest = Some(manifest_path_for(p));
    }
    Ok(out)
}

