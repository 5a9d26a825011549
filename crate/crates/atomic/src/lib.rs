//! Atomic data for ⁸⁸Sr triplet Rydberg states from quantum-defect theory.
//!
//! Level energies follow `E = I − R̃y/(n − δ)²` with defects from an explicit
//! table or the extended Rydberg-Ritz expansion. Radial functions are the
//! hydrogen-like closed form in the effective quantum numbers `n* = n − δ`,
//! `l* = l − δ + I(l)`; dipole elements combine their radial overlaps with
//! LS-coupling angular factors; radiative rates sum spontaneous emission to
//! every lower dipole-allowed level (no black-body transfer).
//!
//! [`Sr88`] bundles a defect model with a memo cache of radial integrals.

pub mod constants;
pub mod decay;
pub mod dipole;
pub mod error;
pub mod qd;
pub mod quadrature;
pub mod radial;
pub mod scaling;
pub mod wigner;

use std::collections::HashMap;
use std::path::Path;
use std::sync::{OnceLock, RwLock};

pub use decay::{Coverage, DecayChannel, DecayReport};
pub use dipole::LsState;
pub use error::{AtomicError, Result};
pub use qd::{Origin, QdModel, QdValue, RitzCoefficients, Series};
pub use radial::RadialState;
pub use scaling::{ScalingAnchors, ScalingLaws};
pub use wigner::{clebsch_gordan, wigner_3j, wigner_6j};

/// Environment variable naming a directory that replaces the bundled data files.
pub const DATA_DIR_ENV: &str = "RYDEX_DATA_DIR";
/// File name of the quantum-defect table.
pub const QD_FILE: &str = "quantum_defects.txt";

type IntegralKey = (Series, u32, Series, u32);

/// Defect model plus a concurrent memo cache of radial dipole integrals.
pub struct Sr88 {
    model: QdModel,
    integrals: RwLock<HashMap<IntegralKey, f64>>,
}

impl Sr88 {
    pub fn new(model: QdModel) -> Self {
        Sr88 { model, integrals: RwLock::new(HashMap::new()) }
    }

    /// Bundled data set.
    pub fn builtin() -> &'static Sr88 {
        static ATOM: OnceLock<Sr88> = OnceLock::new();
        ATOM.get_or_init(|| Sr88::new(QdModel::builtin().clone()))
    }

    /// Loads `quantum_defects.txt` from `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        Ok(Sr88::new(QdModel::load(&dir.join(QD_FILE))?))
    }

    /// Data directory from [`DATA_DIR_ENV`] when set, bundled data otherwise.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) => Self::from_dir(Path::new(&dir)),
            None => Ok(Sr88::new(QdModel::builtin().clone())),
        }
    }

    pub fn model(&self) -> &QdModel {
        &self.model
    }

    pub fn quantum_defect(&self, series: Series, n: u32) -> Result<QdValue> {
        self.model.quantum_defect(series, n)
    }

    /// Energy above the ground state (GHz).
    pub fn level_energy(&self, series: Series, n: u32) -> Result<f64> {
        self.model.level_energy(series, n)
    }

    pub fn radial_state(&self, series: Series, n: u32) -> Result<RadialState> {
        RadialState::new(&self.model, series, n)
    }

    pub fn radial_wavefunction(&self, series: Series, n: u32, r: &[f64]) -> Result<Vec<f64>> {
        let state = self.radial_state(series, n)?;
        Ok(r.iter().map(|&x| state.value(x)).collect())
    }

    /// `∫ R_a R_b r³ dr` in Bohr radii, cached.
    pub fn radial_dipole_integral(&self, a: (Series, u32), b: (Series, u32)) -> Result<f64> {
        let key = if a <= b { (a.0, a.1, b.0, b.1) } else { (b.0, b.1, a.0, a.1) };
        if let Some(v) = self.integrals.read().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let ra = self.radial_state(a.0, a.1)?;
        let rb = self.radial_state(b.0, b.1)?;
        let v = radial::overlap_integral(&ra, &rb, 3)?;
        // Concurrent fills compute the same value; last write wins harmlessly.
        self.integrals.write().expect("cache lock").insert(key, v);
        Ok(v)
    }
}
