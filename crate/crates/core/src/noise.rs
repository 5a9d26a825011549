//! Monte-Carlo noise model: thermal atomic motion (interaction strength and
//! Doppler shifts), Rydberg decay, and laser phase/intensity noise synthesised
//! from power spectral densities.
//!
//! All quantities are SI: angular frequencies in rad/s, times in s, PSD
//! frequencies in Hz. Pulses must therefore be rescaled to physical units
//! before noise analysis.
//!
//! Atomic motion is frozen during a shot: positions and velocities are drawn
//! once per shot, while laser noise varies on the substep grid.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{assemble_hamiltonian, Detunings, DriveChannel, GateTarget, Scheme, SystemConfig};
use crate::propagator::{evolve, gate_fidelity, propagate, EvolutionResult, PulseProtocol};
use crate::rng::task_rng;
use crate::sum::MeanAccumulator;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;
/// Atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Mass of ⁸⁸Sr (kg).
pub const SR88_MASS: f64 = 87.905_612_257_1 * AMU;

/// Harmonic trap and geometry. Atoms sit at the origin and at `(R, 0, 0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    /// Radial trap frequency, applied to x and y (rad/s).
    pub omega_xy: f64,
    /// Axial trap frequency (rad/s).
    pub omega_z: f64,
    /// Temperature (K).
    pub temperature: f64,
    /// Atomic mass (kg).
    pub mass: f64,
    /// Nominal interatomic separation (m).
    pub separation: f64,
    /// Interaction coefficient with `V = C₃/R³` (rad/s · m³).
    pub c3: f64,
    /// Motional ground state (n̄ = 0) regardless of `temperature`.
    #[serde(default)]
    pub zero_temperature: bool,
}

impl TrapConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_xy", self.omega_xy),
            ("omega_z", self.omega_z),
            ("mass", self.mass),
            ("separation", self.separation),
            ("c3", self.c3),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("trap {name} must be positive, got {v}")));
            }
        }
        if !self.zero_temperature && !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::Domain(format!(
                "temperature must be positive (use the zero-temperature flag for n̄ = 0), got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn axis_frequencies(&self) -> [f64; 3] {
        [self.omega_xy, self.omega_xy, self.omega_z]
    }

    /// Thermal occupation `n̄ = 1/(exp(ħω/k_B T) − 1)`.
    pub fn mean_occupation(&self, omega: f64) -> f64 {
        if self.zero_temperature {
            return 0.0;
        }
        1.0 / (HBAR * omega / (K_B * self.temperature)).exp_m1()
    }

    /// `C₃/R³`.
    pub fn v_dipole(&self) -> f64 {
        self.c3 / self.separation.powi(3)
    }
}

/// Per-axis position spread `σ = sqrt(ħ(1+2n̄)/(2mω))` (m).
pub fn position_sigma(trap: &TrapConfig) -> Result<[f64; 3]> {
    trap.validate()?;
    Ok(trap
        .axis_frequencies()
        .map(|w| (HBAR * (1.0 + 2.0 * trap.mean_occupation(w)) / (2.0 * trap.mass * w)).sqrt()))
}

/// Per-axis velocity spread `Δv = sqrt(ħω(1+2n̄)/(2m))` (m/s).
pub fn velocity_sigma(trap: &TrapConfig) -> Result<[f64; 3]> {
    trap.validate()?;
    Ok(trap
        .axis_frequencies()
        .map(|w| (HBAR * w * (1.0 + 2.0 * trap.mean_occupation(w)) / (2.0 * trap.mass)).sqrt()))
}

/// Effective wavevectors per drive channel and lab axis (rad/m).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WavevectorConfig {
    pub k_eff: BTreeMap<DriveChannel, [f64; 3]>,
}

impl WavevectorConfig {
    pub fn along_x(channels: &[(DriveChannel, f64)]) -> Self {
        WavevectorConfig { k_eff: channels.iter().map(|&(ch, k)| (ch, [k, 0.0, 0.0])).collect() }
    }

    pub fn get(&self, channel: DriveChannel) -> [f64; 3] {
        self.k_eff.get(&channel).copied().unwrap_or([0.0; 3])
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_eff.values().flatten().any(|k| !k.is_finite()) {
            return Err(Error::config("non-finite wavevector"));
        }
        Ok(())
    }
}

/// Standard deviation of the Doppler detuning `Σ_α k_α v_α` per channel (rad/s).
///
/// For a wavevector along a single axis this is `k Δv`; in general the axes
/// add in quadrature since the velocity components are independent.
pub fn doppler_sigma(trap: &TrapConfig, wavevectors: &WavevectorConfig) -> Result<BTreeMap<DriveChannel, f64>> {
    wavevectors.validate()?;
    let dv = velocity_sigma(trap)?;
    Ok(wavevectors
        .k_eff
        .iter()
        .map(|(&ch, k)| (ch, (0..3).map(|a| (k[a] * dv[a]).powi(2)).sum::<f64>().sqrt()))
        .collect())
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Interaction strength `C₃/R̃³` for one draw of the six displacement
/// components (atom 1 then atom 2, axes x, y, z each).
pub fn sample_interaction(trap: &TrapConfig, rng: &mut impl Rng) -> Result<f64> {
    let sigma = position_sigma(trap)?;
    loop {
        let d1: [f64; 3] = std::array::from_fn(|a| sigma[a] * normal(rng));
        let d2: [f64; 3] = std::array::from_fn(|a| sigma[a] * normal(rng));
        let r = interaction_from_displacements(trap, &d1, &d2);
        if r.is_finite() {
            return Ok(r);
        }
    }
}

/// `C₃/|r₂ + δ₂ − r₁ − δ₁|³` with the atoms nominally separated along x.
pub fn interaction_from_displacements(trap: &TrapConfig, d1: &[f64; 3], d2: &[f64; 3]) -> f64 {
    let dx = trap.separation + d2[0] - d1[0];
    let dy = d2[1] - d1[1];
    let dz = d2[2] - d1[2];
    let r = (dx * dx + dy * dy + dz * dz).sqrt();
    trap.c3 / (r * r * r)
}

/// Maps per-channel Doppler shifts onto the level detunings of one atom.
///
/// Scheme A: `Δ¹ = 0`, `Δʳ = Δ_{1r}`, `Δʳ' = Δ_{0r'}`.
/// Scheme B (ladder): `Δ¹ = Δ_{01}`, `Δʳ = Δ¹ + Δ_{1r}`, `Δʳ' = Δʳ + Δ_{rr'}`.
pub fn level_detunings(scheme: Scheme, channel_shift: impl Fn(DriveChannel) -> f64) -> Detunings {
    match scheme {
        Scheme::A => Detunings {
            delta1: 0.0,
            deltar: channel_shift(DriveChannel::Ch1R),
            deltarp: channel_shift(DriveChannel::Ch0Rp),
        },
        Scheme::B => {
            let d1 = channel_shift(DriveChannel::Ch01);
            let dr = d1 + channel_shift(DriveChannel::Ch1R);
            Detunings { delta1: d1, deltar: dr, deltarp: dr + channel_shift(DriveChannel::ChRRp) }
        }
    }
}

/// Detunings from given atomic velocities (m/s).
pub fn doppler_from_velocities(scheme: Scheme, wavevectors: &WavevectorConfig, velocities: &[[f64; 3]; 2]) -> [Detunings; 2] {
    velocities.map(|v| {
        level_detunings(scheme, |ch| {
            let k = wavevectors.get(ch);
            k[0] * v[0] + k[1] * v[1] + k[2] * v[2]
        })
    })
}

/// One thermal velocity per atom (atom 1 then atom 2, axes x, y, z), mapped
/// to per-atom level detunings. With `shared`, atom 2 reuses atom 1's velocity.
pub fn sample_doppler(
    trap: &TrapConfig,
    wavevectors: &WavevectorConfig,
    scheme: Scheme,
    shared: bool,
    rng: &mut impl Rng,
) -> Result<[Detunings; 2]> {
    let dv = velocity_sigma(trap)?;
    let v1: [f64; 3] = std::array::from_fn(|a| dv[a] * normal(rng));
    let v2: [f64; 3] = std::array::from_fn(|a| dv[a] * normal(rng));
    let v2 = if shared { v1 } else { v2 };
    Ok(doppler_from_velocities(scheme, wavevectors, &[v1, v2]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsdKind {
    /// Laser phase noise, rad²/Hz.
    Phase,
    /// Relative intensity noise, 1/Hz.
    Intensity,
}

/// Tabulated single-sided PSD.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdTable {
    pub kind: PsdKind,
    frequencies: Vec<f64>,
    densities: Vec<f64>,
}

impl PsdTable {
    pub fn new(kind: PsdKind, frequencies: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() || frequencies.len() != densities.len() {
            return Err(Error::input("PSD needs matching, non-empty frequency and density columns"));
        }
        if frequencies.windows(2).any(|w| !(w[1] > w[0])) || frequencies.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::input("PSD frequencies must be finite, non-negative and strictly increasing"));
        }
        if densities.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::input("PSD densities must be finite and non-negative"));
        }
        Ok(PsdTable { kind, frequencies, densities })
    }

    /// Flat PSD `level` on `[0, f_max]`.
    pub fn white(kind: PsdKind, level: f64, f_max: f64) -> Result<Self> {
        Self::new(kind, vec![0.0, f_max], vec![level, level])
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn max_frequency(&self) -> f64 {
        *self.frequencies.last().expect("non-empty by construction")
    }

    /// Linear interpolation inside the table, zero outside.
    pub fn density(&self, f: f64) -> f64 {
        let fs = &self.frequencies;
        if f < fs[0] || f > fs[fs.len() - 1] {
            return 0.0;
        }
        let i = fs.partition_point(|&x| x <= f);
        if i == 0 {
            return self.densities[0];
        }
        if i == fs.len() {
            return self.densities[fs.len() - 1];
        }
        let t = (f - fs[i - 1]) / (fs[i] - fs[i - 1]);
        self.densities[i - 1] + t * (self.densities[i] - self.densities[i - 1])
    }

    pub fn covers(&self, f_lo: f64, f_hi: f64) -> bool {
        self.frequencies[0] <= f_lo && self.max_frequency() >= f_hi
    }
}

/// Frequency comb of the sum-of-cosines series synthesis.
///
/// `f_j = j Δf` for `j ≥ 1` with `Δf = 1/(padding · duration)`, up to
/// `f_max = 1/(2 dt)`; amplitudes `2 sqrt(S(f_j) Δf)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdSeries {
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub delta_f: f64,
}

impl PsdSeries {
    pub fn new(psd: &PsdTable, duration: f64, dt: f64, padding: usize) -> Result<Self> {
        if !(dt > 0.0 && duration > 0.0) || duration / dt < 2.0 - 1e-9 {
            return Err(Error::input("series needs dt > 0 and duration/dt ≥ 2"));
        }
        if padding == 0 {
            return Err(Error::input("padding must be at least 1"));
        }
        let delta_f = 1.0 / (padding as f64 * duration);
        let f_max = 1.0 / (2.0 * dt);
        let count = (f_max / delta_f * (1.0 + 1e-12)).floor() as usize;
        if !psd.covers(delta_f, f_max) {
            log::warn!(
                "PSD table spans [{:.3e}, {:.3e}] Hz but the series needs [{:.3e}, {:.3e}] Hz; zero beyond the table",
                psd.frequencies[0],
                psd.max_frequency(),
                delta_f,
                f_max
            );
        }
        let frequencies: Vec<f64> = (1..=count).map(|j| j as f64 * delta_f).collect();
        let amplitudes = frequencies.iter().map(|&f| 2.0 * (psd.density(f) * delta_f).sqrt()).collect();
        Ok(PsdSeries { frequencies, amplitudes, delta_f })
    }

    /// `Σ_j 2 S(f_j) Δf`, the variance of the synthesised series.
    pub fn variance(&self) -> f64 {
        self.amplitudes.iter().map(|a| 0.5 * a * a).sum()
    }

    /// One realisation at the uniform grid `t_m = t0 + m·step`, `m < count`.
    /// Draws one uniform phase per comb line, in comb order.
    pub fn sample(&self, t0: f64, step: f64, count: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mut out = vec![0.0; count];
        let tau = std::f64::consts::TAU;
        for (&f, &a) in self.frequencies.iter().zip(&self.amplitudes) {
            let phi: f64 = rng.random_range(0.0..tau);
            if a == 0.0 {
                continue;
            }
            // Rotating phasor; re-anchored periodically to bound drift.
            let rot = num_complex::Complex64::from_polar(1.0, tau * f * step);
            let mut z = num_complex::Complex64::new(0.0, 0.0);
            for (m, slot) in out.iter_mut().enumerate() {
                if m % 256 == 0 {
                    z = num_complex::Complex64::from_polar(a, tau * f * (t0 + m as f64 * step) + phi);
                } else {
                    z *= rot;
                }
                *slot += z.re;
            }
        }
        out
    }
}

/// `f(t) = Σ_j 2 sqrt(S(f_j) Δf) cos(2π f_j t + φ_j)` at the midpoints of a grid
/// of step `dt` covering `[0, duration]`.
pub fn sample_psd_series(psd: &PsdTable, duration: f64, dt: f64, padding: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let series = PsdSeries::new(psd, duration, dt, padding)?;
    let count = (duration / dt).round() as usize;
    Ok(series.sample(0.5 * dt, dt, count, rng))
}

/// Concrete noise realisation for one shot.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NoiseDraw {
    /// Replacement interaction strength.
    pub v_dipole: Option<f64>,
    pub detunings: [Detunings; 2],
    /// Phase offsets per channel on the substep grid.
    pub phase: BTreeMap<DriveChannel, Vec<f64>>,
    /// Relative intensity fluctuations per channel on the substep grid.
    pub intensity: BTreeMap<DriveChannel, Vec<f64>>,
}

impl NoiseDraw {
    pub fn none() -> Self {
        Self::default()
    }

    fn time_dependent(&self) -> bool {
        !self.phase.is_empty() || !self.intensity.is_empty()
    }
}

/// [`propagate`] with noise injected: `Ṽ`, Doppler detunings, and on every
/// substep `Ω̃ = Ω(1 + α/2)`, `φ̃ = φ + δφ`. Decay comes from `config`.
pub fn noisy_propagate(
    config: &SystemConfig,
    pulse: &PulseProtocol,
    draw: &NoiseDraw,
    substeps: usize,
) -> Result<EvolutionResult> {
    config.validate()?;
    pulse.validate()?;
    if substeps == 0 {
        return Err(Error::input("substeps_per_segment must be at least 1"));
    }
    if config.scheme != pulse.scheme() {
        return Err(Error::config("pulse scheme does not match system scheme"));
    }
    let total = pulse.segments() * substeps;
    for (ch, series) in draw.phase.iter().chain(draw.intensity.iter()) {
        if !pulse.scheme().admits(*ch) {
            return Err(Error::ChannelNotAdmitted { channel: *ch, scheme: pulse.scheme() });
        }
        if series.len() != total {
            return Err(Error::input(format!("{ch}: noise series has {} samples, expected {total}", series.len())));
        }
        if series.iter().any(|v| !v.is_finite()) {
            return Err(Error::input(format!("{ch}: non-finite noise sample")));
        }
    }
    let v = draw.v_dipole.unwrap_or(config.v_dipole);
    let per_substep = draw.time_dependent();
    Ok(evolve(pulse.segments(), pulse.segment_duration(), substeps, per_substep, false, |k, j| {
        let mut snap = pulse.snapshot(k);
        snap.detunings = draw.detunings;
        if per_substep {
            let m = k * substeps + j;
            for &ch in pulse.scheme().channels() {
                let mut d = snap.drive(ch).expect("admitted channel present");
                if let Some(a) = draw.intensity.get(&ch) {
                    d.rabi *= 1.0 + 0.5 * a[m];
                }
                if let Some(p) = draw.phase.get(&ch) {
                    d.phase += p[m];
                }
                snap.set_drive(ch, d);
            }
        }
        assemble_hamiltonian(v, config.gamma_r, config.gamma_rp, &snap)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSource {
    Interaction,
    Doppler,
    Decay,
    LaserPhase,
    LaserIntensity,
    AllCombined,
}

impl NoiseSource {
    pub const INDIVIDUAL: [NoiseSource; 5] = [
        NoiseSource::Interaction,
        NoiseSource::Doppler,
        NoiseSource::Decay,
        NoiseSource::LaserPhase,
        NoiseSource::LaserIntensity,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            NoiseSource::Interaction => "interaction",
            NoiseSource::Doppler => "doppler",
            NoiseSource::Decay => "decay",
            NoiseSource::LaserPhase => "laser_phase",
            NoiseSource::LaserIntensity => "laser_intensity",
            NoiseSource::AllCombined => "all_combined",
        }
    }
}

impl std::fmt::Display for NoiseSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for NoiseSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseSource::INDIVIDUAL
            .into_iter()
            .chain([NoiseSource::AllCombined])
            .find(|src| src.tag() == s)
            .ok_or_else(|| Error::input(format!("unknown noise source `{s}`")))
    }
}

/// Everything needed to sample noise for one pulse.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub trap: Option<TrapConfig>,
    pub wavevectors: WavevectorConfig,
    /// Effective decay rates of `|r⟩` and `|r'⟩` (rad/s).
    pub gamma_r: f64,
    pub gamma_rp: f64,
    pub phase_psd: Option<PsdTable>,
    pub intensity_psd: Option<PsdTable>,
    /// Zero-padding factor of the PSD frequency comb (`Δf = 1/(padding τ)`).
    pub psd_padding: usize,
    /// Use one velocity for both atoms instead of independent draws.
    pub shared_doppler: bool,
}

impl NoiseConfig {
    pub fn padding(&self) -> usize {
        if self.psd_padding == 0 {
            4
        } else {
            self.psd_padding
        }
    }

    fn require_trap(&self, source: NoiseSource) -> Result<&TrapConfig> {
        self.trap.as_ref().ok_or_else(|| Error::config(format!("{source} noise requires a trap configuration")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceBudget {
    pub source: NoiseSource,
    /// Mean of `1 − F` over shots.
    pub mean: f64,
    pub std_error: f64,
    pub shots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    /// Noise-free infidelity of the pulse.
    pub baseline: f64,
    pub entries: Vec<SourceBudget>,
}

impl NoiseBudget {
    pub fn get(&self, source: NoiseSource) -> Option<&SourceBudget> {
        self.entries.iter().find(|e| e.source == source)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BudgetRequest {
    pub sources: Vec<NoiseSource>,
    pub shots: usize,
    pub seed: u64,
    pub substeps: usize,
}

/// Random quantities of one shot, drawn in a fixed order so every source
/// sees the same realisation (matched streams).
struct ShotSample {
    v_dipole: Option<f64>,
    detunings: [Detunings; 2],
    phase: BTreeMap<DriveChannel, Vec<f64>>,
    intensity: BTreeMap<DriveChannel, Vec<f64>>,
}

fn draw_shot(
    config: &SystemConfig,
    pulse: &PulseProtocol,
    noise: &NoiseConfig,
    sources: &[NoiseSource],
    series: (&Option<PsdSeries>, &Option<PsdSeries>),
    substeps: usize,
    rng: &mut impl Rng,
) -> Result<ShotSample> {
    let wants = |s: NoiseSource| sources.contains(&s);
    let v_dipole = if wants(NoiseSource::Interaction) {
        Some(sample_interaction(noise.require_trap(NoiseSource::Interaction)?, rng)?)
    } else {
        None
    };
    let detunings = if wants(NoiseSource::Doppler) {
        let trap = noise.require_trap(NoiseSource::Doppler)?;
        sample_doppler(trap, &noise.wavevectors, config.scheme, noise.shared_doppler, rng)?
    } else {
        [Detunings::default(); 2]
    };
    let count = pulse.segments() * substeps;
    let dt = pulse.segment_duration() / substeps as f64;
    let mut draw_all = |s: &Option<PsdSeries>| -> BTreeMap<DriveChannel, Vec<f64>> {
        match s {
            Some(s) => pulse.scheme().channels().iter().map(|&ch| (ch, s.sample(0.5 * dt, dt, count, rng))).collect(),
            None => BTreeMap::new(),
        }
    };
    let phase = if wants(NoiseSource::LaserPhase) { draw_all(series.0) } else { BTreeMap::new() };
    let intensity = if wants(NoiseSource::LaserIntensity) { draw_all(series.1) } else { BTreeMap::new() };
    Ok(ShotSample { v_dipole, detunings, phase, intensity })
}

fn draw_for(sample: &ShotSample, enabled: &[NoiseSource]) -> NoiseDraw {
    let on = |s: NoiseSource| enabled.contains(&s);
    NoiseDraw {
        v_dipole: if on(NoiseSource::Interaction) { sample.v_dipole } else { None },
        detunings: if on(NoiseSource::Doppler) { sample.detunings } else { [Detunings::default(); 2] },
        phase: if on(NoiseSource::LaserPhase) { sample.phase.clone() } else { BTreeMap::new() },
        intensity: if on(NoiseSource::LaserIntensity) { sample.intensity.clone() } else { BTreeMap::new() },
    }
}

/// Monte-Carlo infidelity per requested source alone and for all requested
/// sources combined.
///
/// Shot `s` draws from stream `s` below `request.seed`; every source is
/// evaluated on the same draws. Decay is deterministic and evaluated once.
/// `config` supplies the nominal interaction; its decay rates are ignored in
/// favour of `noise.gamma_r`/`noise.gamma_rp` when decay is requested.
pub fn noise_budget(
    config: &SystemConfig,
    pulse: &PulseProtocol,
    target: &GateTarget,
    noise: &NoiseConfig,
    request: &BudgetRequest,
) -> Result<NoiseBudget> {
    if request.shots == 0 {
        return Err(Error::input("shots must be at least 1"));
    }
    let mut sources: Vec<NoiseSource> =
        request.sources.iter().copied().filter(|s| *s != NoiseSource::AllCombined).collect();
    sources.sort();
    sources.dedup();
    let clean = SystemConfig { gamma_r: 0.0, gamma_rp: 0.0, ..*config };
    let decayed = SystemConfig { gamma_r: noise.gamma_r, gamma_rp: noise.gamma_rp, ..*config };
    decayed.validate()?;
    if let Some(trap) = &noise.trap {
        trap.validate()?;
        if sources.contains(&NoiseSource::Interaction) {
            let rel = (trap.v_dipole() - config.v_dipole).abs() / config.v_dipole.max(f64::MIN_POSITIVE);
            if rel > 1e-9 {
                return Err(Error::config(format!(
                    "trap C3/R^3 = {:.9e} disagrees with v_dipole = {:.9e}",
                    trap.v_dipole(),
                    config.v_dipole
                )));
            }
        }
    }
    let substeps = request.substeps.max(1);
    let duration = pulse.duration();
    let dt = pulse.segment_duration() / substeps as f64;
    let make_series = |psd: &Option<PsdTable>, source: NoiseSource| -> Result<Option<PsdSeries>> {
        if !sources.contains(&source) {
            return Ok(None);
        }
        let psd = psd.as_ref().ok_or_else(|| Error::config(format!("{source} noise requires a PSD table")))?;
        Ok(Some(PsdSeries::new(psd, duration, dt, noise.padding())?))
    };
    let phase_series = make_series(&noise.phase_psd, NoiseSource::LaserPhase)?;
    let intensity_series = make_series(&noise.intensity_psd, NoiseSource::LaserIntensity)?;

    let infidelity = |cfg: &SystemConfig, draw: &NoiseDraw| -> Result<f64> {
        let res = noisy_propagate(cfg, pulse, draw, substeps)?;
        Ok((1.0 - gate_fidelity(&res, target)).clamp(0.0, 1.0))
    };
    let baseline = (1.0 - gate_fidelity(&propagate(&clean, pulse, substeps)?, target)).clamp(0.0, 1.0);
    let decay_value = if sources.contains(&NoiseSource::Decay) { Some(infidelity(&decayed, &NoiseDraw::none())?) } else { None };

    let stochastic: Vec<NoiseSource> = sources.iter().copied().filter(|s| *s != NoiseSource::Decay).collect();
    let combined_cfg = if sources.contains(&NoiseSource::Decay) { decayed } else { clean };
    let need_shots = !stochastic.is_empty();

    // Per shot: one value per stochastic source, then the combined value.
    let per_shot: Vec<Vec<f64>> = if need_shots {
        (0..request.shots)
            .into_par_iter()
            .map(|s| -> Result<Vec<f64>> {
                let mut rng = task_rng(request.seed, &[s as u64]);
                let sample = draw_shot(
                    config,
                    pulse,
                    noise,
                    &sources,
                    (&phase_series, &intensity_series),
                    substeps,
                    &mut rng,
                )?;
                let mut row = Vec::with_capacity(stochastic.len() + 1);
                for &src in &stochastic {
                    row.push(infidelity(&clean, &draw_for(&sample, &[src]))?);
                }
                if stochastic.len() == 1 && combined_cfg == clean {
                    row.push(row[0]);
                } else {
                    row.push(infidelity(&combined_cfg, &draw_for(&sample, &sources))?);
                }
                Ok(row)
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut entries = Vec::new();
    for &src in &sources {
        if src == NoiseSource::Decay {
            let v = decay_value.expect("decay evaluated when requested");
            entries.push(SourceBudget { source: src, mean: v, std_error: 0.0, shots: request.shots });
            continue;
        }
        let col = stochastic.iter().position(|s| *s == src).expect("stochastic source");
        let acc: MeanAccumulator = per_shot.iter().map(|row| row[col]).collect();
        entries.push(SourceBudget { source: src, mean: acc.mean(), std_error: acc.std_error(), shots: acc.count() });
    }
    if !sources.is_empty() {
        let combined = if need_shots {
            let acc: MeanAccumulator = per_shot.iter().map(|row| row[stochastic.len()]).collect();
            SourceBudget { source: NoiseSource::AllCombined, mean: acc.mean(), std_error: acc.std_error(), shots: acc.count() }
        } else {
            SourceBudget {
                source: NoiseSource::AllCombined,
                mean: decay_value.unwrap_or(baseline),
                std_error: 0.0,
                shots: request.shots,
            }
        };
        entries.push(combined);
    }
    Ok(NoiseBudget { baseline, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::embed_target;
    use crate::propagator::Modulation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    pub(crate) fn standard_trap() -> TrapConfig {
        TrapConfig {
            omega_xy: TAU * 100e3,
            omega_z: TAU * 20e3,
            temperature: 1e-6,
            mass: SR88_MASS,
            separation: 6.8e-6,
            c3: TAU * 1570.34e6 * 1e-18,
            zero_temperature: false,
        }
    }

    #[test]
    fn trap_constants() {
        let trap = standard_trap();
        let s = position_sigma(&trap).unwrap();
        assert!((s[0] * 1e6 - 0.02).abs() < 0.005 && (s[1] - s[0]).abs() == 0.0);
        assert!((s[2] * 1e6 - 0.08).abs() < 0.005);
        let dv = velocity_sigma(&trap).unwrap();
        assert!((dv[0] - 0.0152).abs() < 5e-5);
        for a in 0..3 {
            let w = trap.axis_frequencies()[a];
            let expected = HBAR / (2.0 * trap.mass) * (1.0 + 2.0 * trap.mean_occupation(w));
            assert!((s[a] * dv[a] - expected).abs() <= 1e-12 * expected);
        }
        let wv = WavevectorConfig::along_x(&[(DriveChannel::Ch1R, TAU * 3.10e6)]);
        let sd = doppler_sigma(&trap, &wv).unwrap()[&DriveChannel::Ch1R];
        assert!((sd / (TAU * 47e3) - 1.0).abs() < 0.01);
    }

    #[test]
    fn zero_temperature_and_domain() {
        let mut trap = standard_trap();
        trap.temperature = 0.0;
        assert!(matches!(position_sigma(&trap), Err(Error::Domain(_))));
        trap.zero_temperature = true;
        let s = position_sigma(&trap).unwrap();
        assert_eq!(s[0], (HBAR / (2.0 * trap.mass * trap.omega_xy)).sqrt());
        let v = velocity_sigma(&trap).unwrap();
        assert_eq!(v[2], (HBAR * trap.omega_z / (2.0 * trap.mass)).sqrt());
    }

    #[test]
    fn classical_limit_scaling() {
        let mut trap = standard_trap();
        trap.temperature = 1.0;
        let s1 = position_sigma(&trap).unwrap()[0];
        trap.omega_xy *= 4.0;
        let s4 = position_sigma(&trap).unwrap()[0];
        assert!((s4 / s1 - 0.25).abs() < 1e-6);
    }

    #[test]
    fn psd_series_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let zero = PsdTable::white(PsdKind::Phase, 0.0, 1e9).unwrap();
        assert!(sample_psd_series(&zero, 1e-6, 1e-8, 4, &mut rng).unwrap().iter().all(|v| *v == 0.0));
        // Single comb line: a pure sinusoid of amplitude 2 sqrt(S Δf).
        let duration = 1e-6;
        let dt = 1e-8;
        let df = 1.0 / (4.0 * duration);
        let f0 = 10.0 * df;
        let psd = PsdTable::new(PsdKind::Phase, vec![f0 - 0.5 * df, f0, f0 + 0.5 * df], vec![0.0, 2e-9, 0.0]).unwrap();
        let series = PsdSeries::new(&psd, duration, dt, 4).unwrap();
        let nonzero: Vec<_> = series.amplitudes.iter().enumerate().filter(|(_, a)| **a > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        let amp = 2.0 * (2e-9 * df).sqrt();
        let x = sample_psd_series(&psd, duration, dt, 4, &mut rng).unwrap();
        let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(peak <= amp * (1.0 + 1e-12) && peak > 0.95 * amp);
        // Consistency with direct cosine evaluation.
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let white = PsdTable::white(PsdKind::Intensity, 1e-12, 1e9).unwrap();
        let s = PsdSeries::new(&white, duration, dt, 4).unwrap();
        let fast = s.sample(0.5 * dt, dt, 100, &mut r1);
        let phases: Vec<f64> = s.frequencies.iter().map(|_| r2.random_range(0.0..TAU)).collect();
        for (m, v) in fast.iter().enumerate() {
            let t = (m as f64 + 0.5) * dt;
            let direct: f64 =
                s.frequencies.iter().zip(&s.amplitudes).zip(&phases).map(|((f, a), p)| a * (TAU * f * t + p).cos()).sum();
            assert!((v - direct).abs() < 1e-12 * s.variance().sqrt().max(1e-300) * 10.0 + 1e-18);
        }
    }

    fn sample_pulse() -> (SystemConfig, PulseProtocol) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let omega = TAU * 10e6;
        let params: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..omega)).collect();
        let pulse = PulseProtocol::from_parameters(Scheme::A, Modulation::Rabi, 2.0 * PI / omega * 3.0, omega, 0.5, 8, &params)
            .unwrap();
        let cfg = SystemConfig::new(Scheme::A, 0.5 * omega).unwrap();
        (cfg, pulse)
    }

    #[test]
    fn disabled_noise_is_bitwise_propagate() {
        let (cfg, pulse) = sample_pulse();
        let a = propagate(&cfg, &pulse, 4).unwrap();
        let b = noisy_propagate(&cfg, &pulse, &NoiseDraw::none(), 4).unwrap();
        assert_eq!(a.final_operator, b.final_operator);
        assert_eq!(a.t_ryd, b.t_ryd);
    }

    #[test]
    fn budget_is_deterministic_and_trivial_without_sources() {
        let (cfg, pulse) = sample_pulse();
        let target = embed_target(PI).unwrap();
        let mut trap = standard_trap();
        trap.separation = (trap.c3 / cfg.v_dipole).cbrt();
        let noise = NoiseConfig {
            trap: Some(trap),
            wavevectors: WavevectorConfig::along_x(&[(DriveChannel::Ch1R, TAU * 3.1e6), (DriveChannel::Ch0Rp, TAU * 3.1e6)]),
            gamma_r: TAU * 1.66e3,
            gamma_rp: TAU * 0.44e3,
            ..Default::default()
        };
        let none = BudgetRequest { sources: vec![], shots: 1, seed: 0, substeps: 2 };
        let b = noise_budget(&cfg, &pulse, &target, &noise, &none).unwrap();
        assert!(b.entries.is_empty());
        let base = 1.0 - gate_fidelity(&propagate(&cfg, &pulse, 2).unwrap(), &target);
        assert!((b.baseline - base).abs() < 1e-15);
        let req = BudgetRequest {
            sources: vec![NoiseSource::Interaction, NoiseSource::Doppler, NoiseSource::Decay],
            shots: 16,
            seed: 5,
            substeps: 2,
        };
        let b1 = noise_budget(&cfg, &pulse, &target, &noise, &req).unwrap();
        let b2 = noise_budget(&cfg, &pulse, &target, &noise, &req).unwrap();
        assert_eq!(b1, b2);
        assert_eq!(b1.entries.len(), 4);
        for e in &b1.entries {
            assert!((0.0..=1.0).contains(&e.mean) && e.std_error >= 0.0);
        }
    }
}
