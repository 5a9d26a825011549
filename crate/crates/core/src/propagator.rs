//! Piecewise-constant time evolution, gate fidelity and time diagnostics.

use std::collections::BTreeMap;

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    assemble_hamiltonian, exchange_indices, project_to_qubit, rydberg_occupation, ControlSnapshot,
    DriveChannel, GateTarget, Operator, PairBasis, Scheme, SystemConfig, C64, DIM,
};
use crate::linalg::{expm, is_hermitian, mul, HermitianEig};

/// Substeps per segment used when the caller has no preference.
pub const DEFAULT_SUBSTEPS: usize = 8;

/// Which control quantity the piecewise arrays hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    /// Arrays are Rabi frequencies; all phases are 0.
    Rabi,
    /// Arrays are phases; every Rabi frequency is the constant `omega0`.
    Phase,
}

impl std::fmt::Display for Modulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Modulation::Rabi => "rabi",
            Modulation::Phase => "phase",
        })
    }
}

impl std::str::FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rabi" => Ok(Modulation::Rabi),
            "phase" => Ok(Modulation::Phase),
            other => Err(Error::input(format!("unknown modulation `{other}`"))),
        }
    }
}

/// Piecewise-constant pulse on the admitted channels of a scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPulse")]
pub struct PulseProtocol {
    scheme: Scheme,
    modulation: Modulation,
    duration: f64,
    omega0: f64,
    v_over_omega: f64,
    controls: BTreeMap<DriveChannel, Vec<f64>>,
}

#[derive(Deserialize)]
struct RawPulse {
    scheme: Scheme,
    modulation: Modulation,
    duration: f64,
    omega0: f64,
    v_over_omega: f64,
    controls: BTreeMap<DriveChannel, Vec<f64>>,
}

impl TryFrom<RawPulse> for PulseProtocol {
    type Error = Error;

    fn try_from(r: RawPulse) -> Result<Self> {
        PulseProtocol::new(r.scheme, r.modulation, r.duration, r.omega0, r.v_over_omega, r.controls)
    }
}

impl PulseProtocol {
    pub fn new(
        scheme: Scheme,
        modulation: Modulation,
        duration: f64,
        omega0: f64,
        v_over_omega: f64,
        controls: BTreeMap<DriveChannel, Vec<f64>>,
    ) -> Result<Self> {
        let pulse = PulseProtocol { scheme, modulation, duration, omega0, v_over_omega, controls };
        pulse.validate()?;
        Ok(pulse)
    }

    /// Builds a pulse from a flat parameter vector laid out channel-major in
    /// `scheme.channels()` order.
    pub fn from_parameters(
        scheme: Scheme,
        modulation: Modulation,
        duration: f64,
        omega0: f64,
        v_over_omega: f64,
        segments: usize,
        params: &[f64],
    ) -> Result<Self> {
        let channels = scheme.channels();
        if params.len() != channels.len() * segments {
            return Err(Error::input(format!(
                "expected {} parameters, got {}",
                channels.len() * segments,
                params.len()
            )));
        }
        let controls = channels
            .iter()
            .zip(params.chunks(segments))
            .map(|(&ch, chunk)| (ch, chunk.to_vec()))
            .collect();
        Self::new(scheme, modulation, duration, omega0, v_over_omega, controls)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::input(format!("duration must be positive, got {}", self.duration)));
        }
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::input(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if !(self.v_over_omega.is_finite() && self.v_over_omega >= 0.0) {
            return Err(Error::input(format!("v_over_omega must be non-negative, got {}", self.v_over_omega)));
        }
        let channels = self.scheme.channels();
        for ch in self.controls.keys() {
            if !self.scheme.admits(*ch) {
                return Err(Error::ChannelNotAdmitted { channel: *ch, scheme: self.scheme });
            }
        }
        let mut segments = None;
        for &ch in channels {
            let values = self
                .controls
                .get(&ch)
                .ok_or(Error::ChannelMissing { channel: ch, scheme: self.scheme })?;
            if values.len() < 2 {
                return Err(Error::input(format!("{ch}: at least 2 segments required")));
            }
            if *segments.get_or_insert(values.len()) != values.len() {
                return Err(Error::input("control arrays differ in length"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(format!("{ch}: non-finite control value")));
            }
            if self.modulation == Modulation::Rabi && values.iter().any(|&v| v < 0.0) {
                return Err(Error::input(format!("{ch}: negative Rabi frequency")));
            }
        }
        Ok(())
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn v_over_omega(&self) -> f64 {
        self.v_over_omega
    }

    pub fn segments(&self) -> usize {
        self.controls.values().next().map_or(0, Vec::len)
    }

    pub fn segment_duration(&self) -> f64 {
        self.duration / self.segments() as f64
    }

    pub fn controls(&self, channel: DriveChannel) -> Option<&[f64]> {
        self.controls.get(&channel).map(Vec::as_slice)
    }

    pub fn control_map(&self) -> &BTreeMap<DriveChannel, Vec<f64>> {
        &self.controls
    }

    /// Flat parameter vector, channel-major in `scheme.channels()` order.
    pub fn parameters(&self) -> Vec<f64> {
        self.scheme.channels().iter().flat_map(|ch| self.controls[ch].iter().copied()).collect()
    }

    /// Same pulse with new parameters (layout as [`PulseProtocol::parameters`]).
    pub fn with_parameters(&self, params: &[f64]) -> Result<Self> {
        Self::from_parameters(
            self.scheme,
            self.modulation,
            self.duration,
            self.omega0,
            self.v_over_omega,
            self.segments(),
            params,
        )
    }

    pub fn with_duration(&self, duration: f64) -> Result<Self> {
        let mut p = self.clone();
        p.duration = duration;
        p.validate()?;
        Ok(p)
    }

    /// Rabi frequency and phase of `channel` in segment `k`.
    pub fn drive_at(&self, channel: DriveChannel, k: usize) -> (f64, f64) {
        let v = self.controls[&channel][k];
        match self.modulation {
            Modulation::Rabi => (v, 0.0),
            Modulation::Phase => (self.omega0, v),
        }
    }

    pub fn snapshot(&self, k: usize) -> ControlSnapshot {
        let mut snap = ControlSnapshot::new(self.scheme);
        for &ch in self.scheme.channels() {
            let (rabi, phase) = self.drive_at(ch, k);
            snap = snap.with_drive(ch, rabi, phase);
        }
        snap
    }

    /// Maximal Rabi frequency over channels and time.
    pub fn max_rabi(&self) -> f64 {
        match self.modulation {
            Modulation::Phase => self.omega0,
            Modulation::Rabi => self.controls.values().flatten().copied().fold(0.0, f64::max),
        }
    }

    /// Physical rescaling to a new maximal Rabi frequency: time compressed by
    /// `Ω_old/Ω_new`, Rabi values and `omega0` scaled up, `V/Ω` preserved.
    pub fn rescaled(&self, new_omega_max: f64) -> Result<Self> {
        if !(new_omega_max.is_finite() && new_omega_max > 0.0) {
            return Err(Error::input("new maximal Rabi frequency must be positive"));
        }
        let old = self.max_rabi();
        if old <= 0.0 {
            return Err(Error::input("cannot rescale a pulse with zero Rabi frequency"));
        }
        let c = new_omega_max / old;
        let mut p = self.clone();
        p.duration /= c;
        p.omega0 *= c;
        if p.modulation == Modulation::Rabi {
            for v in p.controls.values_mut().flatten() {
                *v *= c;
            }
        }
        Ok(p)
    }

    /// Same controls with a different interaction ratio. The dynamics change,
    /// so the fidelity is no longer that of the original pulse.
    pub fn with_v_over_omega(&self, v_over_omega: f64) -> Result<Self> {
        let mut p = self.clone();
        p.v_over_omega = v_over_omega;
        p.validate()?;
        Ok(p)
    }

    /// Splits at a segment boundary into `[0, k)` and `[k, N)`.
    pub fn split_at(&self, k: usize) -> Result<(Self, Self)> {
        let n = self.segments();
        if k < 2 || n - k < 2 {
            return Err(Error::input("each part needs at least 2 segments"));
        }
        let dt = self.segment_duration();
        let part = |range: std::ops::Range<usize>| {
            let controls = self.controls.iter().map(|(&ch, v)| (ch, v[range.clone()].to_vec())).collect();
            let duration = dt * range.len() as f64;
            Self::new(self.scheme, self.modulation, duration, self.omega0, self.v_over_omega, controls)
        };
        Ok((part(0..k)?, part(k..n)?))
    }
}

/// Outcome of a propagation.
#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub final_operator: Operator,
    /// Time-integrated `|rr'⟩ + |r'r⟩` population, averaged over the four
    /// qubit basis initial states.
    pub t_int: f64,
    /// Time-integrated single-atom Rydberg population summed over atoms,
    /// averaged over the four qubit basis initial states.
    pub t_ryd: f64,
    pub t_int_per_state: [f64; 4],
    pub t_ryd_per_state: [f64; 4],
    /// Basis-averaged populations at every substep grid point (including t=0).
    pub trajectory_populations: Option<Vec<[f64; DIM]>>,
}

pub(crate) type QubitColumns = SMatrix<C64, DIM, 4>;

pub(crate) fn qubit_columns() -> QubitColumns {
    let mut m = QubitColumns::zeros();
    for (q, &idx) in PairBasis::QUBIT_INDICES.iter().enumerate() {
        m[(idx, q)] = C64::new(1.0, 0.0);
    }
    m
}

struct Diagnostics {
    int_weight: [f64; DIM],
    ryd_weight: [f64; DIM],
    t_int: [f64; 4],
    t_ryd: [f64; 4],
    prev_int: [f64; 4],
    prev_ryd: [f64; 4],
    record: Option<Vec<[f64; DIM]>>,
}

impl Diagnostics {
    fn new(states: &QubitColumns, record: bool) -> Self {
        let mut int_weight = [0.0; DIM];
        let (p, q) = exchange_indices();
        int_weight[p] = 1.0;
        int_weight[q] = 1.0;
        let mut ryd_weight = [0.0; DIM];
        for (idx, w) in ryd_weight.iter_mut().enumerate() {
            let (n_r, n_rp) = rydberg_occupation(idx);
            *w = (n_r + n_rp) as f64;
        }
        let mut d = Diagnostics {
            int_weight,
            ryd_weight,
            t_int: [0.0; 4],
            t_ryd: [0.0; 4],
            prev_int: [0.0; 4],
            prev_ryd: [0.0; 4],
            record: record.then(Vec::new),
        };
        let (i, r) = d.measure(states);
        d.prev_int = i;
        d.prev_ryd = r;
        d
    }

    fn measure(&mut self, states: &QubitColumns) -> ([f64; 4], [f64; 4]) {
        let mut int = [0.0; 4];
        let mut ryd = [0.0; 4];
        let mut avg = [0.0; DIM];
        for s in 0..4 {
            for idx in 0..DIM {
                let p = states[(idx, s)].norm_sqr();
                int[s] += self.int_weight[idx] * p;
                ryd[s] += self.ryd_weight[idx] * p;
                avg[idx] += 0.25 * p;
            }
        }
        if let Some(rec) = self.record.as_mut() {
            rec.push(avg);
        }
        (int, ryd)
    }

    fn step(&mut self, states: &QubitColumns, dt: f64) {
        let (int, ryd) = self.measure(states);
        for s in 0..4 {
            self.t_int[s] += 0.5 * (self.prev_int[s] + int[s]) * dt;
            self.t_ryd[s] += 0.5 * (self.prev_ryd[s] + ryd[s]) * dt;
        }
        self.prev_int = int;
        self.prev_ryd = ryd;
    }

    fn finish(self, final_operator: Operator) -> EvolutionResult {
        EvolutionResult {
            final_operator,
            t_int: self.t_int.iter().sum::<f64>() / 4.0,
            t_ryd: self.t_ryd.iter().sum::<f64>() / 4.0,
            t_int_per_state: self.t_int,
            t_ryd_per_state: self.t_ryd,
            trajectory_populations: self.record,
        }
    }
}

/// `exp(−i H dt)` for a single step.
pub(crate) fn step_propagator(h: &Operator, dt: f64) -> Operator {
    if is_hermitian(h, 0.0) {
        HermitianEig::new(h).propagator(dt)
    } else {
        expm(&(h * C64::new(0.0, -dt)))
    }
}

/// Time-stepping core shared by noise-free and noisy propagation.
///
/// `hamiltonian(k, j)` returns the Hamiltonian of substep `j` of segment `k`.
/// When `per_substep` is false it is called once per segment with `j = 0`.
pub(crate) fn evolve<F>(
    segments: usize,
    segment_dt: f64,
    substeps: usize,
    per_substep: bool,
    record: bool,
    mut hamiltonian: F,
) -> EvolutionResult
where
    F: FnMut(usize, usize) -> Operator,
{
    let sub_dt = segment_dt / substeps as f64;
    let mut u = Operator::identity();
    let mut states = qubit_columns();
    let mut diag = Diagnostics::new(&states, record);

    for k in 0..segments {
        if per_substep {
            for j in 0..substeps {
                let step = step_propagator(&hamiltonian(k, j), sub_dt);
                states = mul(&step, &states);
                u = mul(&step, &u);
                diag.step(&states, sub_dt);
            }
        } else {
            let h = hamiltonian(k, 0);
            let (step, segment_u) = if is_hermitian(&h, 0.0) {
                let eig = HermitianEig::new(&h);
                (eig.propagator(sub_dt), eig.propagator(segment_dt))
            } else {
                let step = expm(&(h * C64::new(0.0, -sub_dt)));
                let mut seg = step;
                for _ in 1..substeps {
                    seg = mul(&step, &seg);
                }
                (step, seg)
            };
            for _ in 0..substeps {
                states = mul(&step, &states);
                diag.step(&states, sub_dt);
            }
            u = mul(&segment_u, &u);
        }
    }
    diag.finish(u)
}

fn check_inputs(config: &SystemConfig, pulse: &PulseProtocol, substeps: usize) -> Result<()> {
    config.validate()?;
    pulse.validate()?;
    if substeps == 0 {
        return Err(Error::input("substeps_per_segment must be at least 1"));
    }
    if config.scheme != pulse.scheme() {
        return Err(Error::config(format!(
            "pulse scheme {} does not match system scheme {}",
            pulse.scheme(),
            config.scheme
        )));
    }
    Ok(())
}

/// Propagates the noise-free system under `pulse`.
pub fn propagate(config: &SystemConfig, pulse: &PulseProtocol, substeps_per_segment: usize) -> Result<EvolutionResult> {
    propagate_impl(config, pulse, substeps_per_segment, false)
}

/// As [`propagate`], also recording basis-averaged populations on the substep grid.
pub fn propagate_recorded(
    config: &SystemConfig,
    pulse: &PulseProtocol,
    substeps_per_segment: usize,
) -> Result<EvolutionResult> {
    propagate_impl(config, pulse, substeps_per_segment, true)
}

fn propagate_impl(config: &SystemConfig, pulse: &PulseProtocol, substeps: usize, record: bool) -> Result<EvolutionResult> {
    check_inputs(config, pulse, substeps)?;
    Ok(evolve(pulse.segments(), pulse.segment_duration(), substeps, false, record, |k, _| {
        assemble_hamiltonian(config.v_dipole, config.gamma_r, config.gamma_rp, &pulse.snapshot(k))
    }))
}

/// `|tr(T† P U P)| / 4`, clamped to [0, 1].
pub fn operator_fidelity(u: &Operator, target: &GateTarget) -> f64 {
    let pu = project_to_qubit(u);
    let overlap = (target.matrix().adjoint() * pu).trace();
    (overlap.norm() / 4.0).min(1.0)
}

pub fn gate_fidelity(result: &EvolutionResult, target: &GateTarget) -> f64 {
    operator_fidelity(&result.final_operator, target)
}

/// Accumulated exchange phase `θ_dipole = T_int · V_dipole`.
pub fn exchange_phase(result: &EvolutionResult, config: &SystemConfig) -> f64 {
    result.t_int * config.v_dipole
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{embed_qubit_operator, embed_target, LevelIndex};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn constant_pulse(scheme: Scheme, channel_values: &[(DriveChannel, f64)], duration: f64, n: usize) -> PulseProtocol {
        let controls = scheme
            .channels()
            .iter()
            .map(|&ch| {
                let v = channel_values.iter().find(|(c, _)| *c == ch).map_or(0.0, |x| x.1);
                (ch, vec![v; n])
            })
            .collect();
        PulseProtocol::new(scheme, Modulation::Rabi, duration, 1.0, 1.0, controls).unwrap()
    }

    fn random_pulse(rng: &mut ChaCha8Rng, scheme: Scheme, modulation: Modulation, n: usize) -> PulseProtocol {
        let controls = scheme
            .channels()
            .iter()
            .map(|&ch| {
                let v = (0..n)
                    .map(|_| match modulation {
                        Modulation::Rabi => rng.random_range(0.0..2.0),
                        Modulation::Phase => rng.random_range(-PI..PI),
                    })
                    .collect();
                (ch, v)
            })
            .collect();
        PulseProtocol::new(scheme, modulation, rng.random_range(2.0..8.0), 1.0, 1.5, controls).unwrap()
    }

    #[test]
    fn bare_exchange_rotation() {
        let v = 1.3;
        let cfg = SystemConfig::new(Scheme::A, v).unwrap();
        let t = 0.77;
        let pulse = constant_pulse(Scheme::A, &[], t, 4);
        let res = propagate(&cfg, &pulse, 8).unwrap();
        let rrp = PairBasis::index(LevelIndex::RYD, LevelIndex::RYD_PRIME);
        let rpr = PairBasis::index(LevelIndex::RYD_PRIME, LevelIndex::RYD);
        let p = res.final_operator[(rpr, rrp)].norm_sqr();
        assert!((p - (v * t).sin().powi(2)).abs() < 1e-13);
        // Exchange acts outside the qubit subspace.
        assert!((project_to_qubit(&res.final_operator) - crate::hilbert::QubitOperator::identity()).norm() < 1e-14);
        assert_eq!(res.t_int, 0.0);
        assert_eq!(res.t_ryd, 0.0);
    }

    #[test]
    fn resonant_pi_pulse() {
        let cfg = SystemConfig::new(Scheme::A, 0.0).unwrap();
        let pulse = constant_pulse(Scheme::A, &[(DriveChannel::Ch1R, 2.0)], PI / 2.0, 2);
        let res = propagate(&cfg, &pulse, 1).unwrap();
        let u = res.final_operator;
        let one = |a, b| PairBasis::index(a, b);
        let (o, r, z) = (LevelIndex::ONE, LevelIndex::RYD, LevelIndex::ZERO);
        // |10⟩ → −i|r0⟩, |11⟩ → (−i)²|rr⟩.
        assert!((u[(one(r, z), one(o, z))] - C64::new(0.0, -1.0)).norm() < 1e-13);
        assert!((u[(one(r, r), one(o, o))] - C64::new(-1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn substep_count_does_not_change_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for scheme in [Scheme::A, Scheme::B] {
            let cfg = SystemConfig::new(scheme, 1.5).unwrap();
            let pulse = random_pulse(&mut rng, scheme, Modulation::Rabi, 8);
            let a = propagate(&cfg, &pulse, 1).unwrap();
            let b = propagate(&cfg, &pulse, 64).unwrap();
            assert!((a.final_operator - b.final_operator).camax() < 1e-12);
        }
    }

    #[test]
    fn unitarity_and_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for (scheme, modulation) in [(Scheme::A, Modulation::Phase), (Scheme::B, Modulation::Rabi)] {
            let cfg = SystemConfig::new(scheme, 2.0).unwrap();
            let pulse = random_pulse(&mut rng, scheme, modulation, 10);
            let full = propagate(&cfg, &pulse, 4).unwrap();
            let u = full.final_operator;
            assert!((u.adjoint() * u - Operator::identity()).camax() < 1e-10);
            let (first, second) = pulse.split_at(4).unwrap();
            let u1 = propagate(&cfg, &first, 4).unwrap().final_operator;
            let u2 = propagate(&cfg, &second, 4).unwrap().final_operator;
            assert!((u2 * u1 - u).camax() < 1e-12);
            assert!(full.t_ryd >= 0.0 && full.t_ryd <= 2.0 * pulse.duration() + 1e-12);
        }
    }

    #[test]
    fn fidelity_examples() {
        let iswap = embed_target(PI).unwrap();
        let exact = embed_qubit_operator(iswap.matrix());
        assert!((operator_fidelity(&exact, &iswap) - 1.0).abs() < 1e-15);
        assert!((operator_fidelity(&Operator::identity(), &iswap) - 0.5).abs() < 1e-15);
        let phased = exact * C64::from_polar(1.0, 0.73);
        assert!((operator_fidelity(&phased, &iswap) - 1.0).abs() < 1e-14);
        let damped = exact * C64::from((-0.2_f64).exp());
        assert!((operator_fidelity(&damped, &iswap) - (-0.2_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn exchange_phase_from_rotation() {
        // propagate() averages over qubit initial states, so |rr'⟩ is tracked directly.
        let v = 0.9;
        let t = PI / (2.0 * v);
        let n = 400;
        let sub_dt = t / n as f64;
        let rrp = PairBasis::index(LevelIndex::RYD, LevelIndex::RYD_PRIME);
        let rpr = PairBasis::index(LevelIndex::RYD_PRIME, LevelIndex::RYD);
        let mut h = Operator::zeros();
        h[(rrp, rpr)] = C64::from(v);
        h[(rpr, rrp)] = C64::from(v);
        let step = step_propagator(&h, sub_dt);
        let mut psi = nalgebra::SVector::<C64, DIM>::zeros();
        psi[rrp] = C64::from(1.0);
        let mut integral = 0.0;
        let mut prev = 1.0;
        for _ in 0..n {
            psi = step * psi;
            let p = psi[rrp].norm_sqr() + psi[rpr].norm_sqr();
            integral += 0.5 * (prev + p) * sub_dt;
            prev = p;
        }
        assert!((integral - t).abs() < 1e-12);
        assert!((integral * v - PI / 2.0).abs() < 1e-12);
        let result = EvolutionResult {
            final_operator: Operator::identity(),
            t_int: integral,
            t_ryd: 0.0,
            t_int_per_state: [0.0; 4],
            t_ryd_per_state: [0.0; 4],
            trajectory_populations: None,
        };
        let cfg = SystemConfig::new(Scheme::A, v).unwrap();
        assert!((exchange_phase(&result, &cfg) - PI / 2.0).abs() < 1e-12);
        let cfg2 = SystemConfig::new(Scheme::A, 2.0 * v).unwrap();
        assert!((exchange_phase(&result, &cfg2) - PI).abs() < 1e-12);
    }

    #[test]
    fn rescaling_preserves_fidelity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pulse = random_pulse(&mut rng, Scheme::A, Modulation::Rabi, 12);
        let target = embed_target(PI).unwrap();
        let omega = pulse.max_rabi();
        let cfg = SystemConfig::new(Scheme::A, pulse.v_over_omega() * omega).unwrap();
        let f0 = gate_fidelity(&propagate(&cfg, &pulse, 2).unwrap(), &target);
        let scaled = pulse.rescaled(2.0 * omega).unwrap();
        assert!((scaled.duration() - 0.5 * pulse.duration()).abs() < 1e-15);
        let cfg2 = SystemConfig::new(Scheme::A, pulse.v_over_omega() * 2.0 * omega).unwrap();
        let f1 = gate_fidelity(&propagate(&cfg2, &scaled, 2).unwrap(), &target);
        assert!((f0 - f1).abs() < 1e-12);
        assert_eq!(pulse.rescaled(omega).unwrap().parameters(), pulse.parameters());
    }

    #[test]
    fn pulse_validation() {
        let mut c = BTreeMap::new();
        c.insert(DriveChannel::Ch1R, vec![0.0, 1.0]);
        assert!(matches!(
            PulseProtocol::new(Scheme::A, Modulation::Rabi, 1.0, 1.0, 1.0, c.clone()),
            Err(Error::ChannelMissing { .. })
        ));
        c.insert(DriveChannel::Ch0Rp, vec![0.0, f64::NAN]);
        assert!(PulseProtocol::new(Scheme::A, Modulation::Rabi, 1.0, 1.0, 1.0, c.clone()).is_err());
        c.insert(DriveChannel::Ch0Rp, vec![0.0, -1.0]);
        assert!(PulseProtocol::new(Scheme::A, Modulation::Rabi, 1.0, 1.0, 1.0, c.clone()).is_err());
        assert!(PulseProtocol::new(Scheme::A, Modulation::Phase, 1.0, 1.0, 1.0, c).is_ok());
    }
}
