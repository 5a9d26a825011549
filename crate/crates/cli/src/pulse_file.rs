//! Versioned pulse files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rydex_core::grape::OptimizationRecord;
use rydex_core::{embed_target, gate_fidelity, propagate, PulseProtocol, SystemConfig};

use crate::error::{finite, CliError, Result};
use crate::files::{read_json, write_json};

pub const PULSE_SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Master seed and task stream of the optimisation run.
    pub seed: u64,
    pub stream: u64,
    /// SHA-256 of the optimizer settings as JSON.
    pub settings_digest: String,
    pub tool_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseDiagnostics {
    /// Target exchange angle θ (rad).
    pub theta: f64,
    pub infidelity: f64,
    /// In the time unit of the pulse.
    pub t_int: f64,
    pub t_ryd: f64,
    pub theta_dipole: f64,
    pub converged: bool,
    /// Set when a step missed its threshold or the pulse was altered so that
    /// the stored fidelity no longer applies.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseFile {
    pub schema_version: u32,
    pub pulse: PulseProtocol,
    pub provenance: Provenance,
    pub diagnostics: PulseDiagnostics,
}

pub fn settings_digest<T: Serialize>(settings: &T) -> String {
    let bytes = serde_json::to_vec(settings).expect("settings serialise");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl PulseFile {
    pub fn from_record(rec: &OptimizationRecord, settings_digest: String) -> Self {
        PulseFile {
            schema_version: PULSE_SCHEMA_VERSION,
            pulse: rec.pulse.clone(),
            provenance: Provenance {
                seed: rec.seed,
                stream: rec.stream,
                settings_digest,
                tool_version: TOOL_VERSION.to_string(),
            },
            diagnostics: PulseDiagnostics {
                theta: rec.theta,
                infidelity: rec.infidelity,
                t_int: rec.t_int,
                t_ryd: rec.t_ryd,
                theta_dipole: rec.theta_dipole,
                converged: rec.converged,
                flagged: rec.flagged,
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let value: serde_json::Value = read_json(path)?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == PULSE_SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(CliError::Config(format!(
                    "{}: pulse schema version {v} is not supported (expected {PULSE_SCHEMA_VERSION})",
                    path.display()
                )))
            }
            None => return Err(CliError::Config(format!("{}: missing schema_version", path.display()))),
        }
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    /// `V_dipole` in the pulse's frequency unit.
    pub fn v_dipole(&self) -> f64 {
        self.pulse.v_over_omega() * self.pulse.omega0()
    }

    /// `T_int · V`.
    pub fn t_int_v(&self) -> f64 {
        self.diagnostics.t_int * self.v_dipole()
    }

    /// `T_ryd · Ω_max`.
    pub fn t_ryd_omega(&self) -> f64 {
        self.diagnostics.t_ryd * self.pulse.max_rabi()
    }

    /// `τ · Ω_max`.
    pub fn tau_omega(&self) -> f64 {
        self.pulse.duration() * self.pulse.max_rabi()
    }

    /// Replaces the pulse and recomputes the noise-free diagnostics.
    pub fn with_pulse(&self, pulse: PulseProtocol, flagged: bool) -> Result<Self> {
        let target = embed_target(self.diagnostics.theta)?;
        let config = SystemConfig::new(pulse.scheme(), pulse.v_over_omega() * pulse.omega0())?;
        let res = propagate(&config, &pulse, 1)?;
        let infidelity = finite("infidelity", 1.0 - gate_fidelity(&res, &target))?;
        let theta_dipole = rydex_core::exchange_phase(&res, &config);
        let mut out = self.clone();
        out.diagnostics = PulseDiagnostics {
            infidelity,
            t_int: res.t_int,
            t_ryd: res.t_ryd,
            theta_dipole,
            flagged: flagged || self.diagnostics.flagged,
            ..self.diagnostics.clone()
        };
        out.pulse = pulse;
        Ok(out)
    }
}
