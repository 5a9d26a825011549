//! Single-electron reduced dipole elements and LS-coupled pair elements.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::qd::Series;
use crate::wigner::{clebsch_gordan, wigner_3j, wigner_6j};
use crate::Sr88;

/// Triplet level `5snl ³L_J` with the 5s core electron as spectator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LsState {
    pub series: Series,
    pub n: u32,
    pub j: u32,
}

impl LsState {
    pub fn new(series: Series, n: u32, j: u32) -> Self {
        LsState { series, n, j }
    }

    /// Total orbital angular momentum (equal to the Rydberg electron's `l`).
    pub fn l_total(&self) -> u32 {
        self.series.l()
    }
}

pub const SPIN: f64 = 1.0;
const CORE_L: f64 = 0.0;

fn bracket(x: f64) -> f64 {
    2.0 * x + 1.0
}

fn parity(k: f64) -> f64 {
    if (k.round() as i64).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Sr88 {
    /// `⟨n'l'‖d‖nl⟩ = (−1)^{l'} sqrt(2l+1) (l' 1 l; 0 0 0) ∫ R' R r³ dr` (atomic units).
    /// Exactly zero unless `|l − l'| = 1`.
    pub fn reduced_dipole(&self, primed: (Series, u32), unprimed: (Series, u32)) -> Result<f64> {
        let lp = primed.0.l() as f64;
        let l = unprimed.0.l() as f64;
        let angular = wigner_3j(lp, 1.0, l, 0.0, 0.0, 0.0);
        if angular == 0.0 {
            return Ok(0.0);
        }
        let radial = self.radial_dipole_integral(primed, unprimed)?;
        Ok(parity(lp) * bracket(l).sqrt() * angular * radial)
    }

    /// `⟨J'M'| D_q |J M⟩` for triplet states with one excited electron:
    ///
    /// `(−1)^{l₂+l₁+S+J'} sqrt([L][l₂'][J][L']) C^{J'M'}_{JM,1q}
    ///  {L S J; J' 1 L'} {l₂ l₁ L; L' 1 l₂'} ⟨n'l₂'‖d‖n l₂⟩`.
    ///
    /// The statistical factor carries `[J]` of the ket, which makes
    /// `Σ_{M,q} |⟨J'M'|D_q|JM⟩|²` summed over J the single-electron line strength.
    pub fn pair_dipole(&self, bra: LsState, m_bra: f64, ket: LsState, m_ket: f64, q: f64) -> Result<f64> {
        let cg = clebsch_gordan(ket.j as f64, m_ket, 1.0, q, bra.j as f64, m_bra);
        if cg == 0.0 {
            return Ok(0.0);
        }
        let factor = self.pair_angular_factor(bra, ket);
        if factor == 0.0 {
            return Ok(0.0);
        }
        Ok(cg * factor * self.reduced_dipole((bra.series, bra.n), (ket.series, ket.n))?)
    }

    fn pair_angular_factor(&self, bra: LsState, ket: LsState) -> f64 {
        let (lp, l) = (bra.l_total() as f64, ket.l_total() as f64);
        let (jp, j) = (bra.j as f64, ket.j as f64);
        let phase = parity(l + CORE_L + SPIN + jp);
        phase
            * (bracket(l) * bracket(lp) * bracket(j) * bracket(lp)).sqrt()
            * wigner_6j(l, SPIN, j, jp, 1.0, lp)
            * wigner_6j(l, CORE_L, l, lp, 1.0, lp)
    }

    /// `Σ_{M,q} |⟨J'M'|D_q|JM⟩|²` divided by the squared radial integral,
    /// evaluated by explicit summation over projections.
    pub fn line_strength_weight(&self, bra: LsState, m_bra: f64, ket: LsState) -> f64 {
        let factor = self.pair_angular_factor(bra, ket);
        let (lp, l) = (bra.l_total() as f64, ket.l_total() as f64);
        let single = parity(lp) * bracket(l).sqrt() * wigner_3j(lp, 1.0, l, 0.0, 0.0, 0.0);
        let j = ket.j as i64;
        let mut total = 0.0;
        for m in -j..=j {
            for q in -1..=1 {
                let cg = clebsch_gordan(ket.j as f64, m as f64, 1.0, q as f64, bra.j as f64, m_bra);
                total += (cg * factor * single).powi(2);
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angular_weights_match_single_electron_factors() {
        let atom = Sr88::builtin();
        // ³S₁ → ³P_J: weights (2J+1)/9 summing to 1.
        let s = LsState::new(Series::S1, 40, 1);
        let total: f64 = (0..3)
            .map(|j| {
                let w = atom.line_strength_weight(s, 0.0, LsState::new(Series::P0, 30, j));
                assert!((w - (2 * j + 1) as f64 / 9.0).abs() < 1e-14);
                w
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-14);
        let p = LsState::new(Series::P0, 40, 0);
        let ws = atom.line_strength_weight(p, 0.0, LsState::new(Series::S1, 30, 1));
        let wd = atom.line_strength_weight(p, 0.0, LsState::new(Series::D1, 30, 1));
        assert!((ws - 1.0 / 3.0).abs() < 1e-14);
        assert!((wd - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn selection_rules_give_exact_zero() {
        let atom = Sr88::builtin();
        assert_eq!(atom.reduced_dipole((Series::S1, 30), (Series::S1, 31)).unwrap(), 0.0);
        assert_eq!(atom.reduced_dipole((Series::S1, 30), (Series::D1, 31)).unwrap(), 0.0);
        let s = LsState::new(Series::S1, 40, 1);
        assert_eq!(atom.pair_dipole(s, 0.0, LsState::new(Series::P0, 30, 0), 1.0, 0.0).unwrap(), 0.0);
    }
}
