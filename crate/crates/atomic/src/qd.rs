//! Quantum defects and level energies.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::constants::{CM1_GHZ, IONIZATION_GHZ, RYDBERG_SR88_GHZ};
use crate::error::{AtomicError, Result};

/// Triplet series of 5snl states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Series {
    /// 5sns ³S₁.
    S1,
    /// 5snp ³P_J; all J share one defect.
    P0,
    /// 5snd ³D₁.
    D1,
}

impl Series {
    pub const ALL: [Series; 3] = [Series::S1, Series::P0, Series::D1];

    pub fn l(self) -> u32 {
        match self {
            Series::S1 => 0,
            Series::P0 => 1,
            Series::D1 => 2,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Series::S1 => "S1",
            Series::P0 => "P0",
            Series::D1 => "D1",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Series::S1 => "5sns 3S1",
            Series::P0 => "5snp 3P0",
            Series::D1 => "5snd 3D1",
        }
    }

    /// Integer shift `I(l)` of the effective orbital quantum number:
    /// 4 for s, 2 for p, 2 for d except 0 at n = 4, 5.
    pub fn wavefunction_shift(self, n: u32) -> u32 {
        match self {
            Series::S1 => 4,
            Series::P0 => 2,
            Series::D1 if n <= 5 => 0,
            Series::D1 => 2,
        }
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Series {
    type Err = AtomicError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S1" | "S" | "3S1" => Ok(Series::S1),
            "P0" | "P" | "3P0" | "3P" => Ok(Series::P0),
            "D1" | "D" | "3D1" => Ok(Series::D1),
            _ => Err(AtomicError::Parameter(format!("unknown series `{s}` (expected S1, P0 or D1)"))),
        }
    }
}

/// Where a defect value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Measured,
    Interpolated,
    /// Placeholder continued from the Ritz expansion below its validity floor.
    Extrapolated,
    /// Taken from an outside reference rather than derived from defects.
    External,
    /// Ritz expansion inside its validity range.
    Ritz,
}

impl Origin {
    /// Placeholder data that should be replaced by measured values.
    pub fn is_placeholder(self) -> bool {
        self == Origin::Extrapolated
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "measured" => Some(Origin::Measured),
            "interpolated" => Some(Origin::Interpolated),
            "extrapolated" => Some(Origin::Extrapolated),
            "external" => Some(Origin::External),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RitzCoefficients {
    pub delta0: f64,
    pub delta2: f64,
    pub delta4: f64,
    /// Smallest n at which the expansion is used.
    pub n_min: u32,
}

impl RitzCoefficients {
    /// `δ⁽⁰⁾ + δ⁽²⁾/(n − δ⁽⁰⁾)² + δ⁽⁴⁾/(n − δ⁽⁰⁾)⁴`.
    pub fn defect(&self, n: f64) -> f64 {
        let x2 = (n - self.delta0).powi(2);
        self.delta0 + self.delta2 / x2 + self.delta4 / (x2 * x2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QdValue {
    pub delta: f64,
    pub origin: Origin,
}

/// Ritz coefficients, explicit defects and optional J-resolved level energies.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QdModel {
    ritz: BTreeMap<Series, RitzCoefficients>,
    table: BTreeMap<(Series, u32), QdValue>,
    levels: BTreeMap<(Series, u32, u32), (f64, Origin)>,
}

const BUILTIN: &str = include_str!("../data/quantum_defects.txt");

impl QdModel {
    pub fn builtin() -> &'static QdModel {
        static MODEL: OnceLock<QdModel> = OnceLock::new();
        MODEL.get_or_init(|| QdModel::parse(BUILTIN).expect("bundled quantum-defect table is well formed"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| AtomicError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut model = QdModel::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| AtomicError::Parse { line: i + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |k: usize| -> Result<f64> {
                let s = fields.get(k).ok_or_else(|| err(format!("missing field {}", k + 1)))?;
                s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(format!("bad number `{s}`")))
            };
            let int = |k: usize| -> Result<u32> {
                let s = fields.get(k).ok_or_else(|| err(format!("missing field {}", k + 1)))?;
                s.parse::<u32>().map_err(|_| err(format!("bad integer `{s}`")))
            };
            let series = || -> Result<Series> {
                fields.get(1).ok_or_else(|| err("missing series".into()))?.parse().map_err(|e: AtomicError| err(e.to_string()))
            };
            let origin = |k: usize| -> Result<Origin> {
                let s = fields.get(k).ok_or_else(|| err("missing origin".into()))?;
                Origin::parse(s).ok_or_else(|| err(format!("unknown origin `{s}`")))
            };
            let expect_len = |n: usize| -> Result<()> {
                if fields.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("expected {n} fields, found {}", fields.len())))
                }
            };
            match fields[0] {
                "ritz" => {
                    expect_len(6)?;
                    let c = RitzCoefficients { delta0: num(2)?, delta2: num(3)?, delta4: num(4)?, n_min: int(5)? };
                    model.ritz.insert(series()?, c);
                }
                "qd" => {
                    expect_len(5)?;
                    model.table.insert((series()?, int(2)?), QdValue { delta: num(3)?, origin: origin(4)? });
                }
                "level" => {
                    expect_len(6)?;
                    model.levels.insert((series()?, int(2)?, int(3)?), (num(4)? * CM1_GHZ, origin(5)?));
                }
                other => return Err(err(format!("unknown record `{other}`"))),
            }
        }
        Ok(model)
    }

    pub fn ritz(&self, series: Series) -> Option<&RitzCoefficients> {
        self.ritz.get(&series)
    }

    /// Explicit entry if present, Ritz expansion at or above its floor, data gap otherwise.
    pub fn quantum_defect(&self, series: Series, n: u32) -> Result<QdValue> {
        if let Some(v) = self.table.get(&(series, n)) {
            return Ok(*v);
        }
        match self.ritz.get(&series) {
            Some(c) if n >= c.n_min => Ok(QdValue { delta: c.defect(n as f64), origin: Origin::Ritz }),
            _ => Err(AtomicError::DataGap { series, n }),
        }
    }

    /// `n* = n − δ`.
    pub fn effective_n(&self, series: Series, n: u32) -> Result<f64> {
        Ok(n as f64 - self.quantum_defect(series, n)?.delta)
    }

    /// Lowest n with defect data.
    pub fn lowest_n(&self, series: Series) -> Option<u32> {
        let table = self.table.keys().filter(|(s, _)| *s == series).map(|(_, n)| *n).min();
        let ritz = self.ritz.get(&series).map(|c| c.n_min);
        match (table, ritz) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// `E = I − R̃y/(n − δ)²` in GHz above the ground state.
    pub fn level_energy(&self, series: Series, n: u32) -> Result<f64> {
        let ns = self.effective_n(series, n)?;
        Ok(IONIZATION_GHZ - RYDBERG_SR88_GHZ / (ns * ns))
    }

    /// Fine-structure resolved energy when tabulated, defect-based otherwise.
    pub fn level_energy_j(&self, series: Series, n: u32, j: u32) -> Result<(f64, Origin)> {
        if let Some(&(e, origin)) = self.levels.get(&(series, n, j)) {
            return Ok((e, origin));
        }
        Ok((self.level_energy(series, n)?, self.quantum_defect(series, n)?.origin))
    }

    pub fn table_entries(&self) -> impl Iterator<Item = (Series, u32, QdValue)> + '_ {
        self.table.iter().map(|(&(s, n), &v)| (s, n, v))
    }
}
