//! Physical constants and ⁸⁸Sr reference values.

use std::f64::consts::TAU;

/// Ionization energy of ⁸⁸Sr (GHz).
pub const IONIZATION_GHZ: f64 = 1_377_012.72;
/// Mass-reduced Rydberg constant of ⁸⁸Sr (GHz).
pub const RYDBERG_SR88_GHZ: f64 = 3_289_821.43;
/// Hartree energy over h (GHz).
pub const HARTREE_GHZ: f64 = 6_579_683.920_502;
/// Speed of light in atomic units.
pub const C_AU: f64 = 137.035_999_084;
/// Atomic unit of time (s).
pub const AU_TIME: f64 = 2.418_884_326_585_7e-17;
/// Bohr radius (m).
pub const BOHR: f64 = 5.291_772_109_03e-11;
/// Atomic unit of C₃ (E_h a₀³) divided by ħ, in rad/s · m³.
pub const C3_AU_SI: f64 = HARTREE_GHZ * 1e9 * TAU * BOHR * BOHR * BOHR;
/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Wavenumber to frequency (GHz per cm⁻¹).
pub const CM1_GHZ: f64 = 29.979_245_8;
/// Mass of ⁸⁸Sr in atomic mass units.
pub const SR88_MASS_U: f64 = 87.905_612_257_1;

/// Effective decay rate of 5s5p ³P₀ (s⁻¹).
pub const GAMMA_EFF_0: f64 = TAU * 1.35e-3;
/// Effective decay rate of the |1⟩ level (s⁻¹).
pub const GAMMA_EFF_1: f64 = TAU * 0.15e-3;
/// Total radiative rate of 5s5p ³P₂ as quoted for the bare level (s⁻¹).
/// Differs from [`GAMMA_EFF_1`], which is the value used in the dynamics.
pub const GAMMA_3P2: f64 = 9.55e-4;
/// Effective decay rates of the Rydberg levels at n = 61 used in the noise model (s⁻¹).
pub const GAMMA_EFF_R_61: f64 = TAU * 1.66e3;
pub const GAMMA_EFF_RP_61: f64 = TAU * 0.44e3;

/// C₃ of the |rr'⟩ ↔ |r'r⟩ exchange at n = 61 (rad/s · m³).
pub const C3_N61: f64 = TAU * 1570.34e6 * 1e-18;
