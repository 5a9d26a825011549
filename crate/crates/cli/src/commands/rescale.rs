use serde_json::json;

use crate::cli::RescaleArgs;
use crate::commands::Outcome;
use crate::error::Result;
use crate::manifest::manifest_path_for;
use crate::pulse_file::PulseFile;
use crate::units::{mhz, to_mhz};

pub fn run(args: &RescaleArgs) -> Result<Outcome> {
    let file = PulseFile::load(&args.pulse)?;
    let mut pulse = file.pulse.rescaled(mhz(args.omega_max_mhz))?;
    let mut out = Outcome::default();
    let overridden = match args.v_dipole_mhz {
        Some(v) => {
            let ratio = mhz(v) / pulse.omega0();
            pulse = pulse.with_v_over_omega(ratio)?;
            out.warn(format!(
                "V/Omega changed from {} to {ratio}; the pulse is flagged and its fidelity recomputed",
                file.pulse.v_over_omega()
            ));
            true
        }
        None => false,
    };
    let rescaled = if overridden {
        file.with_pulse(pulse, true)?
    } else {
        // Dimensionless dynamics are unchanged; only the time axis moves.
        let mut f = file.clone();
        let c = pulse.duration() / file.pulse.duration();
        f.diagnostics.t_int *= c;
        f.diagnostics.t_ryd *= c;
        f.pulse = pulse;
        f
    };
    rescaled.save(&args.out)?;
    out.outputs.push(args.out.clone());
    out.summary = json!({
        "omega_max_mhz": to_mhz(rescaled.pulse.max_rabi()),
        "v_dipole_mhz": to_mhz(rescaled.v_dipole()),
        "duration_s": rescaled.pulse.duration(),
        "infidelity": rescaled.diagnostics.infidelity,
        "flagged": rescaled.diagnostics.flagged,
    });
    out.manifest = Some(manifest_path_for(&args.out));
    Ok(out)
}
