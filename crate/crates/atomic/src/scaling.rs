//! Dependence of the hardware parameters on the Rydberg principal number.

use serde::{Deserialize, Serialize};

use crate::constants::{C3_AU_SI, C3_N61, SPEED_OF_LIGHT};
use crate::decay::Coverage;
use crate::dipole::LsState;
use crate::error::Result;
use crate::qd::Series;
use crate::Sr88;

/// Reference point of the scalings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingAnchors {
    pub n_ref: u32,
    /// C₃ at `n_ref` (rad/s · m³).
    pub c3_ref: f64,
    /// Lower level of the |1⟩ ↔ |r⟩ drive, `5s5p ³P_J` with this J.
    pub qubit_j: u32,
}

impl Default for ScalingAnchors {
    fn default() -> Self {
        ScalingAnchors { n_ref: 61, c3_ref: C3_N61, qubit_j: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaws {
    pub n: u32,
    /// `C₃(n) = C₃(n_ref) (n*(n)/n*(n_ref))⁴` with ³S₁ effective numbers (rad/s · m³).
    pub c3: f64,
    /// `Ω(n)/Ω(n_ref)` at fixed field, from the ratio of `⟨5p‖d‖ns⟩` elements.
    pub rabi_factor: f64,
    /// Wavelength of the `5s5p ³P_J → 5sns ³S₁` drive (m).
    pub wavelength: f64,
    /// `k_eff(n)/k_eff(n_ref)` for a single-photon drive, `λ(n_ref)/λ(n)`.
    pub k_eff_factor: f64,
    /// Radiative rates of `|r⟩ = 5sns ³S₁` and `|r'⟩ = 5snp ³P₀` (s⁻¹).
    pub gamma_r: f64,
    pub gamma_rp: f64,
    pub coverage_r: Coverage,
    pub coverage_rp: Coverage,
}

impl Sr88 {
    /// Wavelength of the `5s5p ³P_J → 5sns ³S₁` transition (m).
    pub fn drive_wavelength(&self, n: u32, qubit_j: u32) -> Result<f64> {
        let upper = self.level_energy(Series::S1, n)?;
        let (lower, _) = self.model().level_energy_j(Series::P0, 5, qubit_j)?;
        Ok(SPEED_OF_LIGHT / ((upper - lower) * 1e9))
    }

    pub fn scaling_laws(&self, n: u32, anchors: &ScalingAnchors) -> Result<ScalingLaws> {
        let ns = self.model().effective_n(Series::S1, n)?;
        let ns_ref = self.model().effective_n(Series::S1, anchors.n_ref)?;
        let c3 = anchors.c3_ref * (ns / ns_ref).powi(4);
        let d = self.reduced_dipole((Series::P0, 5), (Series::S1, n))?;
        let d_ref = self.reduced_dipole((Series::P0, 5), (Series::S1, anchors.n_ref))?;
        let wavelength = self.drive_wavelength(n, anchors.qubit_j)?;
        let wavelength_ref = self.drive_wavelength(anchors.n_ref, anchors.qubit_j)?;
        let r = self.decay_rate(Series::S1, n)?;
        let rp = self.decay_rate(Series::P0, n)?;
        Ok(ScalingLaws {
            n,
            c3,
            rabi_factor: (d / d_ref).abs(),
            wavelength,
            k_eff_factor: wavelength_ref / wavelength,
            gamma_r: r.rate,
            gamma_rp: rp.rate,
            coverage_r: r.coverage,
            coverage_rp: rp.coverage,
        })
    }

    /// C₃ estimate `|⟨nP₀, 0|D₀|nS₁, 0⟩|²` from the dipole elements
    /// (rad/s · m³). The angular structure of the exchange coupling is not
    /// resolved here, so this is an order-of-magnitude cross-check.
    pub fn c3_from_dipoles(&self, n: u32) -> Result<f64> {
        let d = self.pair_dipole(LsState::new(Series::P0, n, 0), 0.0, LsState::new(Series::S1, n, 1), 0.0, 0.0)?;
        Ok(d * d * C3_AU_SI)
    }
}
