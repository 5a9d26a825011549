//! Spontaneous radiative decay rates.
//!
//! `Γ_i = Σ_j (4/3) ω_ij³ |⟨i|D|j⟩|² / (ħ c³)` over all lower dipole-allowed
//! levels `j`, with `|⟨i|D|j⟩|²` summed over the lower projections and photon
//! polarisations. Black-body induced transfer is not included.

use serde::{Deserialize, Serialize};

use crate::constants::{AU_TIME, C_AU, HARTREE_GHZ};
use crate::dipole::LsState;
use crate::error::{AtomicError, Result};
use crate::qd::{Origin, Series};
use crate::Sr88;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayChannel {
    pub lower: LsState,
    /// Transition frequency (GHz).
    pub frequency_ghz: f64,
    /// Partial rate (s⁻¹).
    pub rate: f64,
}

/// Which lower levels rest on placeholder or missing defect data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Lower levels whose defect is a placeholder.
    pub placeholder: Vec<(Series, u32)>,
    /// Lower levels skipped for lack of data.
    pub missing: Vec<(Series, u32)>,
}

impl Coverage {
    /// No channel was skipped.
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    /// Every channel uses measured, interpolated or Ritz defects.
    pub fn is_exact(&self) -> bool {
        self.missing.is_empty() && self.placeholder.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub state: LsState,
    /// Total rate Γ (s⁻¹); `Γ/2π` is the linewidth in Hz.
    pub rate: f64,
    /// `1/Γ` (s).
    pub lifetime: f64,
    pub channels: Vec<DecayChannel>,
    pub coverage: Coverage,
}

impl DecayReport {
    /// `Γ/2π` in Hz.
    pub fn linewidth_hz(&self) -> f64 {
        self.rate / std::f64::consts::TAU
    }
}

/// Lower series and J values reachable from `series` by E1 decay in the model.
pub fn decay_targets(series: Series) -> &'static [(Series, u32)] {
    match series {
        Series::S1 => &[(Series::P0, 0), (Series::P0, 1), (Series::P0, 2)],
        Series::P0 => &[(Series::S1, 1), (Series::D1, 1)],
        Series::D1 => &[(Series::P0, 0), (Series::P0, 1), (Series::P0, 2)],
    }
}

fn initial_j(series: Series) -> u32 {
    match series {
        Series::S1 | Series::D1 => 1,
        Series::P0 => 0,
    }
}

/// Lowest principal number a lower level of `series` can have.
fn series_floor(series: Series) -> u32 {
    match series {
        Series::S1 => 6,
        Series::P0 => 5,
        Series::D1 => 4,
    }
}

impl Sr88 {
    /// Radiative rate of `5snl` in the `M_J = 0` sublevel (the total rate is
    /// independent of `M_J`). All fine-structure components of a lower ³P
    /// level share one defect and hence one energy.
    pub fn decay_rate(&self, series: Series, n: u32) -> Result<DecayReport> {
        let state = LsState::new(series, n, initial_j(series));
        let e_upper = self.level_energy(series, n)?;
        let mut channels = Vec::new();
        let mut coverage = Coverage::default();
        for &(lower_series, j) in decay_targets(series) {
            for n_low in series_floor(lower_series)..=n + 1 {
                let qd = match self.quantum_defect(lower_series, n_low) {
                    Ok(v) => v,
                    Err(AtomicError::DataGap { .. }) => {
                        if !coverage.missing.contains(&(lower_series, n_low)) {
                            coverage.missing.push((lower_series, n_low));
                        }
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let e_lower = self.level_energy(lower_series, n_low)?;
                if e_lower >= e_upper {
                    continue;
                }
                if qd.origin == Origin::Extrapolated && !coverage.placeholder.contains(&(lower_series, n_low)) {
                    coverage.placeholder.push((lower_series, n_low));
                }
                let lower = LsState::new(lower_series, n_low, j);
                let radial = self.radial_dipole_integral((series, n), (lower_series, n_low))?;
                let weight = self.line_strength_weight(state, 0.0, lower);
                let omega = (e_upper - e_lower) / HARTREE_GHZ;
                let rate_au = 4.0 / 3.0 * omega.powi(3) * weight * radial * radial / C_AU.powi(3);
                channels.push(DecayChannel { lower, frequency_ghz: e_upper - e_lower, rate: rate_au / AU_TIME });
            }
        }
        let rate: f64 = channels.iter().map(|c| c.rate).sum();
        if !(rate > 0.0) {
            return Err(AtomicError::Parameter(format!("{series} n={n} has no lower decay channel in the model")));
        }
        Ok(DecayReport { state, rate, lifetime: 1.0 / rate, channels, coverage })
    }
}
