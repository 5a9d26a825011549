//! Hardware descriptions: TOML presets resolved against the atomic model.
//!
//! ```toml
//! name = "standard"
//! rabi_mhz = 10.0          # Ω/2π of the rescaled pulse
//! n = 61
//! # c3_mhz_um3 = 1570.34   # optional, otherwise scaled from n = 61
//!
//! [trap]
//! omega_xy_khz = 100.0
//! omega_z_khz = 20.0
//! temperature_uk = 1.0
//!
//! [laser]
//! k_eff_x_per_m = 3.10e6   # k/2π along x, applied to every drive channel
//! # phase_psd = "phase.psd"          (relative to this file)
//! # intensity_psd = "intensity.psd"
//!
//! [decay]                  # optional, otherwise scaled from n = 61
//! gamma_r_khz = 1.66
//! gamma_rp_khz = 0.44
//! ```

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rydex_atomic::constants::{GAMMA_EFF_RP_61, GAMMA_EFF_R_61, SR88_MASS_U};
use rydex_atomic::{ScalingAnchors, Series, Sr88};
use rydex_core::noise::{NoiseConfig, PsdTable, TrapConfig, WavevectorConfig, AMU};
use rydex_core::{PulseProtocol, SystemConfig};

use crate::error::{CliError, Result};
use crate::psd_file::load_psd;
use crate::units::{c3_from_mhz_um3, khz, mhz};

const N_REF: u32 = 61;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareFile {
    pub name: String,
    pub rabi_mhz: f64,
    pub n: u32,
    #[serde(default)]
    pub c3_mhz_um3: Option<f64>,
    pub trap: TrapSection,
    pub laser: LaserSection,
    #[serde(default)]
    pub decay: Option<DecaySection>,
    /// Values quoted alongside the preset; not used in computations.
    #[serde(default)]
    pub reference: Option<ReferenceSection>,
    /// One Doppler velocity for both atoms.
    #[serde(default)]
    pub shared_doppler: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub omega_xy_khz: f64,
    pub omega_z_khz: f64,
    pub temperature_uk: f64,
    #[serde(default)]
    pub mass_u: Option<f64>,
    #[serde(default)]
    pub zero_temperature: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserSection {
    pub k_eff_x_per_m: f64,
    #[serde(default)]
    pub phase_psd: Option<PathBuf>,
    #[serde(default)]
    pub intensity_psd: Option<PathBuf>,
    #[serde(default)]
    pub psd_padding: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    pub gamma_r_khz: f64,
    pub gamma_rp_khz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    #[serde(default)]
    pub v_dipole_mhz: Option<f64>,
    #[serde(default)]
    pub separation_um: Option<f64>,
    #[serde(default)]
    pub fidelity: Option<f64>,
}

pub const PRESETS: [(&str, &str); 3] = [
    ("standard", include_str!("../presets/standard.toml")),
    ("optimal", include_str!("../presets/optimal.toml")),
    ("optimal_phase", include_str!("../presets/optimal_phase.toml")),
];

/// Fully resolved hardware in SI units (rates in rad/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hardware {
    pub name: String,
    pub rabi: f64,
    pub n: u32,
    pub c3: f64,
    pub omega_xy: f64,
    pub omega_z: f64,
    pub temperature: f64,
    pub zero_temperature: bool,
    pub mass: f64,
    /// rad/m.
    pub k_eff: f64,
    pub gamma_r: f64,
    pub gamma_rp: f64,
    pub phase_psd: Option<PsdTable>,
    pub intensity_psd: Option<PsdTable>,
    pub psd_padding: usize,
    pub shared_doppler: bool,
    /// How C₃ and Γ were obtained.
    pub derived: Vec<String>,
}

/// Everything a noise evaluation needs for one pulse on one hardware.
#[derive(Clone, Debug)]
pub struct Setup {
    /// Pulse rescaled to the hardware Rabi frequency (SI time axis).
    pub pulse: PulseProtocol,
    pub system: SystemConfig,
    pub noise: NoiseConfig,
}

/// Preset name or path to a TOML file.
pub fn load_hardware(spec: &str, atom: &Sr88) -> Result<Hardware> {
    if let Some((_, text)) = PRESETS.iter().find(|(name, _)| *name == spec) {
        return parse_hardware(text, None, atom);
    }
    let path = Path::new(spec);
    if !path.exists() {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
        return Err(CliError::Config(format!(
            "hardware `{spec}` is neither a preset ({}) nor an existing file",
            names.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_hardware(&text, path.parent(), atom)
}

pub fn parse_hardware(text: &str, base: Option<&Path>, atom: &Sr88) -> Result<Hardware> {
    let file: HardwareFile = toml::from_str(text).map_err(|e| CliError::Config(format!("hardware file: {e}")))?;
    resolve(&file, base, atom)
}

fn resolve(file: &HardwareFile, base: Option<&Path>, atom: &Sr88) -> Result<Hardware> {
    let positive = |name: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::Config(format!("hardware {name} must be positive, got {v}")))
        }
    };
    positive("rabi_mhz", file.rabi_mhz)?;
    positive("omega_xy_khz", file.trap.omega_xy_khz)?;
    positive("omega_z_khz", file.trap.omega_z_khz)?;
    if !file.trap.zero_temperature {
        positive("temperature_uk", file.trap.temperature_uk)?;
    }
    if !(file.laser.k_eff_x_per_m.is_finite() && file.laser.k_eff_x_per_m >= 0.0) {
        return Err(CliError::Config("k_eff_x_per_m must be non-negative".into()));
    }
    let mut derived = Vec::new();
    let c3 = match file.c3_mhz_um3 {
        Some(v) => c3_from_mhz_um3(positive("c3_mhz_um3", v)?),
        None => {
            derived.push(format!("C3 scaled from n = {N_REF} to n = {}", file.n));
            c3_at(atom, file.n)?
        }
    };
    let (gamma_r, gamma_rp) = match &file.decay {
        Some(d) => (khz(d.gamma_r_khz), khz(d.gamma_rp_khz)),
        None => {
            derived.push(format!("decay rates scaled from n = {N_REF} to n = {}", file.n));
            decay_at(atom, file.n)?
        }
    };
    let load = |p: &Option<PathBuf>| -> Result<Option<PsdTable>> {
        p.as_ref()
            .map(|p| {
                let full = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                load_psd(&full)
            })
            .transpose()
    };
    Ok(Hardware {
        name: file.name.clone(),
        rabi: mhz(file.rabi_mhz),
        n: file.n,
        c3,
        omega_xy: khz(file.trap.omega_xy_khz),
        omega_z: khz(file.trap.omega_z_khz),
        temperature: file.trap.temperature_uk * 1e-6,
        zero_temperature: file.trap.zero_temperature,
        mass: file.trap.mass_u.unwrap_or(SR88_MASS_U) * AMU,
        k_eff: TAU * file.laser.k_eff_x_per_m,
        gamma_r,
        gamma_rp,
        phase_psd: load(&file.laser.phase_psd)?,
        intensity_psd: load(&file.laser.intensity_psd)?,
        psd_padding: file.laser.psd_padding.unwrap_or(4),
        shared_doppler: file.shared_doppler,
        derived,
    })
}

/// `C₃(n)` by `n*⁴` scaling from the n = 61 anchor.
pub fn c3_at(atom: &Sr88, n: u32) -> Result<f64> {
    Ok(atom.scaling_laws(n, &ScalingAnchors::default())?.c3)
}

/// Effective `(Γ_r, Γ_r')` at `n`: the n = 61 effective rates times the
/// model's radiative-rate ratio `Γ(n)/Γ(61)` per series.
pub fn decay_at(atom: &Sr88, n: u32) -> Result<(f64, f64)> {
    if n == N_REF {
        return Ok((GAMMA_EFF_R_61, GAMMA_EFF_RP_61));
    }
    let ratio = |s: Series| -> Result<f64> {
        Ok(atom.decay_rate(s, n)?.rate / atom.decay_rate(s, N_REF)?.rate)
    };
    Ok((GAMMA_EFF_R_61 * ratio(Series::S1)?, GAMMA_EFF_RP_61 * ratio(Series::P0)?))
}

impl Hardware {
    pub fn trap(&self, v_dipole: f64) -> TrapConfig {
        TrapConfig {
            omega_xy: self.omega_xy,
            omega_z: self.omega_z,
            temperature: self.temperature,
            mass: self.mass,
            separation: (self.c3 / v_dipole).cbrt(),
            c3: self.c3,
            zero_temperature: self.zero_temperature,
        }
    }

    /// Rescales `pulse` to this hardware's Rabi frequency and builds the
    /// matching system and noise configuration. `V = (V/Ω) Ω` and `R` follows
    /// from `C₃/R³ = V`.
    pub fn setup(&self, pulse: &PulseProtocol) -> Result<Setup> {
        let pulse = pulse.rescaled(self.rabi)?;
        let v = pulse.v_over_omega() * pulse.omega0();
        let system = SystemConfig::new(pulse.scheme(), v)?;
        let channels: Vec<_> = pulse.scheme().channels().iter().map(|&ch| (ch, self.k_eff)).collect();
        let noise = NoiseConfig {
            trap: (v > 0.0).then(|| self.trap(v)),
            wavevectors: WavevectorConfig::along_x(&channels),
            gamma_r: self.gamma_r,
            gamma_rp: self.gamma_rp,
            phase_psd: self.phase_psd.clone(),
            intensity_psd: self.intensity_psd.clone(),
            psd_padding: self.psd_padding,
            shared_doppler: self.shared_doppler,
        };
        Ok(Setup { pulse, system, noise })
    }

    pub fn separation(&self, v_dipole: f64) -> f64 {
        (self.c3 / v_dipole).cbrt()
    }
}
