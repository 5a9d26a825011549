//! Two-atom, four-level state space and Hamiltonian assembly.
//!
//! Each atom carries the levels `|0⟩, |1⟩, |r⟩, |r'⟩` (indices 0..=3). Pair
//! states use the row-major tensor convention `index(a1, a2) = 4·a1 + a2`, so
//! the computational subspace `|00⟩, |01⟩, |10⟩, |11⟩` sits at `{0, 1, 4, 5}`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dimension of the two-atom Hilbert space.
pub const DIM: usize = 16;

pub type Operator = SMatrix<C64, DIM, DIM>;
pub type QubitOperator = SMatrix<C64, 4, 4>;
pub type StateVector = SVector<C64, DIM>;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Single-atom level: 0 → |0⟩, 1 → |1⟩, 2 → |r⟩, 3 → |r'⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelIndex(u8);

impl LevelIndex {
    pub const ZERO: LevelIndex = LevelIndex(0);
    pub const ONE: LevelIndex = LevelIndex(1);
    pub const RYD: LevelIndex = LevelIndex(2);
    pub const RYD_PRIME: LevelIndex = LevelIndex(3);
    pub const ALL: [LevelIndex; 4] = [Self::ZERO, Self::ONE, Self::RYD, Self::RYD_PRIME];

    pub fn new(value: u8) -> Result<Self> {
        if value <= 3 {
            Ok(LevelIndex(value))
        } else {
            Err(Error::input(format!("level index {value} outside 0..=3")))
        }
    }

    #[inline]
    pub fn value(self) -> usize {
        self.0 as usize
    }

    pub fn is_rydberg(self) -> bool {
        self.0 >= 2
    }
}

/// Ordering of the 16-dimensional pair basis.
pub struct PairBasis;

impl PairBasis {
    pub const DIMENSION: usize = DIM;
    /// `|00⟩, |01⟩, |10⟩, |11⟩` in ascending order.
    pub const QUBIT_INDICES: [usize; 4] = [0, 1, 4, 5];

    #[inline]
    pub fn index(a1: LevelIndex, a2: LevelIndex) -> usize {
        4 * a1.value() + a2.value()
    }

    #[inline]
    pub fn levels(index: usize) -> (LevelIndex, LevelIndex) {
        debug_assert!(index < DIM);
        (LevelIndex((index / 4) as u8), LevelIndex((index % 4) as u8))
    }

    /// Index of the pair state with the two atoms exchanged.
    #[inline]
    pub fn swapped(index: usize) -> usize {
        let (a, b) = Self::levels(index);
        Self::index(b, a)
    }
}

/// Laser or microwave drive between two single-atom levels `a ↔ b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DriveChannel {
    #[serde(rename = "ch01")]
    Ch01,
    #[serde(rename = "ch1r")]
    Ch1R,
    #[serde(rename = "ch0rp")]
    Ch0Rp,
    #[serde(rename = "chrrp")]
    ChRRp,
}

impl DriveChannel {
    pub const ALL: [DriveChannel; 4] = [Self::Ch01, Self::Ch1R, Self::Ch0Rp, Self::ChRRp];

    /// Level `a` of the `a ↔ b` transition (the ket on the right of `|b⟩⟨a|`).
    pub fn lower(self) -> LevelIndex {
        match self {
            DriveChannel::Ch01 => LevelIndex::ZERO,
            DriveChannel::Ch1R => LevelIndex::ONE,
            DriveChannel::Ch0Rp => LevelIndex::ZERO,
            DriveChannel::ChRRp => LevelIndex::RYD,
        }
    }

    /// Level `b` of the `a ↔ b` transition.
    pub fn upper(self) -> LevelIndex {
        match self {
            DriveChannel::Ch01 => LevelIndex::ONE,
            DriveChannel::Ch1R => LevelIndex::RYD,
            DriveChannel::Ch0Rp => LevelIndex::RYD_PRIME,
            DriveChannel::ChRRp => LevelIndex::RYD_PRIME,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            DriveChannel::Ch01 => "ch01",
            DriveChannel::Ch1R => "ch1r",
            DriveChannel::Ch0Rp => "ch0rp",
            DriveChannel::ChRRp => "chrrp",
        }
    }

    #[inline]
    pub(crate) fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for DriveChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DriveChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ch01" | "01" => Ok(DriveChannel::Ch01),
            "ch1r" | "1r" => Ok(DriveChannel::Ch1R),
            "ch0rp" | "0rp" | "0r'" => Ok(DriveChannel::Ch0Rp),
            "chrrp" | "rrp" | "rr'" => Ok(DriveChannel::ChRRp),
            other => Err(Error::input(format!("unknown drive channel `{other}`"))),
        }
    }
}

/// Global driving scheme.
///
/// Scheme A couples `|1⟩ ↔ |r⟩` and `|0⟩ ↔ |r'⟩`; scheme B couples
/// `|0⟩ ↔ |1⟩`, `|1⟩ ↔ |r⟩` and `|r⟩ ↔ |r'⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    A,
    B,
}

impl Scheme {
    pub fn channels(self) -> &'static [DriveChannel] {
        match self {
            Scheme::A => &[DriveChannel::Ch1R, DriveChannel::Ch0Rp],
            Scheme::B => &[DriveChannel::Ch01, DriveChannel::Ch1R, DriveChannel::ChRRp],
        }
    }

    pub fn admits(self, channel: DriveChannel) -> bool {
        self.channels().contains(&channel)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::A => f.write_str("A"),
            Scheme::B => f.write_str("B"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Scheme::A),
            "B" | "b" => Ok(Scheme::B),
            other => Err(Error::input(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Noise-free system parameters (angular frequencies, ħ = 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// `V_dipole = C₃/R³`.
    pub v_dipole: f64,
    /// Effective decay rate of `|r⟩`.
    pub gamma_r: f64,
    /// Effective decay rate of `|r'⟩`.
    pub gamma_rp: f64,
    pub scheme: Scheme,
}

impl SystemConfig {
    pub fn new(scheme: Scheme, v_dipole: f64) -> Result<Self> {
        let cfg = SystemConfig { v_dipole, gamma_r: 0.0, gamma_rp: 0.0, scheme };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_decay(mut self, gamma_r: f64, gamma_rp: f64) -> Result<Self> {
        self.gamma_r = gamma_r;
        self.gamma_rp = gamma_rp;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("v_dipole", self.v_dipole), ("gamma_r", self.gamma_r), ("gamma_rp", self.gamma_rp)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn has_decay(&self) -> bool {
        self.gamma_r != 0.0 || self.gamma_rp != 0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub rabi: f64,
    pub phase: f64,
}

/// Per-atom detunings of `|1⟩`, `|r⟩`, `|r'⟩` entering as `−Δ^a |a⟩⟨a|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Detunings {
    pub delta1: f64,
    pub deltar: f64,
    pub deltarp: f64,
}

impl Detunings {
    pub fn of(&self, level: LevelIndex) -> f64 {
        match level.value() {
            1 => self.delta1,
            2 => self.deltar,
            3 => self.deltarp,
            _ => 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.delta1 == 0.0 && self.deltar == 0.0 && self.deltarp == 0.0
    }
}

/// Instantaneous control values: one [`Drive`] per present channel plus
/// per-atom detunings.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ControlSnapshot {
    drives: [Option<Drive>; 4],
    pub detunings: [Detunings; 2],
}

impl ControlSnapshot {
    /// Snapshot with every channel of `scheme` present and switched off.
    pub fn new(scheme: Scheme) -> Self {
        let mut snap = ControlSnapshot::default();
        for &ch in scheme.channels() {
            snap.drives[ch.slot()] = Some(Drive::default());
        }
        snap
    }

    pub fn with_drive(mut self, channel: DriveChannel, rabi: f64, phase: f64) -> Self {
        self.set_drive(channel, Drive { rabi, phase });
        self
    }

    pub fn with_shared_detunings(mut self, d: Detunings) -> Self {
        self.detunings = [d, d];
        self
    }

    pub fn set_drive(&mut self, channel: DriveChannel, drive: Drive) {
        self.drives[channel.slot()] = Some(drive);
    }

    pub fn remove_drive(&mut self, channel: DriveChannel) {
        self.drives[channel.slot()] = None;
    }

    pub fn drive(&self, channel: DriveChannel) -> Option<Drive> {
        self.drives[channel.slot()]
    }

    pub fn drives(&self) -> impl Iterator<Item = (DriveChannel, Drive)> + '_ {
        DriveChannel::ALL.iter().filter_map(|&ch| self.drives[ch.slot()].map(|d| (ch, d)))
    }

    /// Checks channel/scheme consistency and the `Ω ≥ 0` invariant.
    pub fn validate(&self, scheme: Scheme) -> Result<()> {
        for ch in DriveChannel::ALL {
            match (self.drives[ch.slot()], scheme.admits(ch)) {
                (Some(_), false) => return Err(Error::ChannelNotAdmitted { channel: ch, scheme }),
                (None, true) => return Err(Error::ChannelMissing { channel: ch, scheme }),
                (Some(d), true) => {
                    if !d.rabi.is_finite() || !d.phase.is_finite() {
                        return Err(Error::input(format!("non-finite control on {ch}")));
                    }
                    if d.rabi < 0.0 {
                        return Err(Error::input(format!("negative Rabi frequency {} on {ch}", d.rabi)));
                    }
                }
                (None, false) => {}
            }
        }
        for d in &self.detunings {
            if !(d.delta1.is_finite() && d.deltar.is_finite() && d.deltarp.is_finite()) {
                return Err(Error::input("non-finite detuning"));
            }
        }
        Ok(())
    }
}

/// `Σ_atoms |b⟩_i⟨a|` for the channel's `a ↔ b` transition.
pub fn raising_operator(channel: DriveChannel) -> Operator {
    let mut op = Operator::zeros();
    for (row, col) in raising_entries(channel) {
        op[(row, col)] = C64::new(1.0, 0.0);
    }
    op
}

/// Matrix positions `(row, col)` of the unit entries of [`raising_operator`].
pub fn raising_entries(channel: DriveChannel) -> [(usize, usize); 8] {
    let (a, b) = (channel.lower(), channel.upper());
    let mut out = [(0, 0); 8];
    for (k, c) in LevelIndex::ALL.iter().enumerate() {
        out[k] = (PairBasis::index(b, *c), PairBasis::index(a, *c));
        out[4 + k] = (PairBasis::index(*c, b), PairBasis::index(*c, a));
    }
    out
}

/// `|rr'⟩⟨r'r| + h.c.`
pub fn exchange_operator() -> Operator {
    let mut op = Operator::zeros();
    let (p, q) = exchange_indices();
    op[(p, q)] = C64::new(1.0, 0.0);
    op[(q, p)] = C64::new(1.0, 0.0);
    op
}

pub(crate) fn exchange_indices() -> (usize, usize) {
    (
        PairBasis::index(LevelIndex::RYD, LevelIndex::RYD_PRIME),
        PairBasis::index(LevelIndex::RYD_PRIME, LevelIndex::RYD),
    )
}

/// Number of atoms in `|r⟩` and in `|r'⟩` for a pair index.
pub(crate) fn rydberg_occupation(index: usize) -> (u8, u8) {
    let (a, b) = PairBasis::levels(index);
    let count = |l: LevelIndex| (a == l) as u8 + (b == l) as u8;
    (count(LevelIndex::RYD), count(LevelIndex::RYD_PRIME))
}

/// `H/ħ` for the given configuration and control snapshot.
///
/// Exchange term, global drives `(Ω/2) e^{iφ} |b⟩⟨a| + h.c.` on both atoms,
/// per-atom detunings `−Δ^a` on `|1⟩, |r⟩, |r'⟩` and the non-Hermitian decay
/// diagonal `−(i/2)Γ` on `|r⟩, |r'⟩`.
pub fn build_hamiltonian(config: &SystemConfig, snapshot: &ControlSnapshot) -> Result<Operator> {
    config.validate()?;
    snapshot.validate(config.scheme)?;
    Ok(assemble_hamiltonian(config.v_dipole, config.gamma_r, config.gamma_rp, snapshot))
}

/// Unchecked assembly shared by the noise-free and noisy paths.
pub(crate) fn assemble_hamiltonian(
    v_dipole: f64,
    gamma_r: f64,
    gamma_rp: f64,
    snapshot: &ControlSnapshot,
) -> Operator {
    let mut h = Operator::zeros();
    let (p, q) = exchange_indices();
    h[(p, q)] = C64::new(v_dipole, 0.0);
    h[(q, p)] = C64::new(v_dipole, 0.0);

    for (ch, d) in snapshot.drives() {
        if d.rabi == 0.0 {
            continue;
        }
        let coupling = C64::from_polar(0.5 * d.rabi, d.phase);
        for (row, col) in raising_entries(ch) {
            h[(row, col)] += coupling;
            h[(col, row)] += coupling.conj();
        }
    }

    for idx in 0..DIM {
        let (a1, a2) = PairBasis::levels(idx);
        let detuning = snapshot.detunings[0].of(a1) + snapshot.detunings[1].of(a2);
        let (n_r, n_rp) = rydberg_occupation(idx);
        let decay = gamma_r * n_r as f64 + gamma_rp * n_rp as f64;
        h[(idx, idx)] += C64::new(-detuning, -0.5 * decay);
    }
    h
}

/// Exchange-gate target `U_XY(θ)` on the qubit subspace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateTarget {
    theta: f64,
    matrix: QubitOperator,
}

impl GateTarget {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn matrix(&self) -> &QubitOperator {
        &self.matrix
    }

    pub fn iswap() -> Self {
        embed_target(std::f64::consts::PI).expect("π is a valid angle")
    }
}

/// `U_XY(θ)`: identity on `|00⟩, |11⟩`, rotation `[[cos θ/2, i sin θ/2], [i sin θ/2, cos θ/2]]`
/// on `{|01⟩, |10⟩}`.
pub fn embed_target(theta: f64) -> Result<GateTarget> {
    if !theta.is_finite() || theta <= 0.0 || theta > std::f64::consts::PI * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("exchange angle {theta} outside (0, π]")));
    }
    let (s, c) = (0.5 * theta).sin_cos();
    let mut m = QubitOperator::zeros();
    m[(0, 0)] = C64::new(1.0, 0.0);
    m[(3, 3)] = C64::new(1.0, 0.0);
    m[(1, 1)] = C64::new(c, 0.0);
    m[(2, 2)] = C64::new(c, 0.0);
    m[(1, 2)] = C64::new(0.0, s);
    m[(2, 1)] = C64::new(0.0, s);
    Ok(GateTarget { theta, matrix: m })
}

/// Submatrix on rows/columns `{0, 1, 4, 5}`.
pub fn project_to_qubit(u: &Operator) -> QubitOperator {
    let q = PairBasis::QUBIT_INDICES;
    QubitOperator::from_fn(|i, j| u[(q[i], q[j])])
}

/// Embeds a 4×4 qubit operator into the pair space, identity elsewhere.
pub fn embed_qubit_operator(u: &QubitOperator) -> Operator {
    let q = PairBasis::QUBIT_INDICES;
    let mut out = Operator::identity();
    for i in 0..4 {
        for j in 0..4 {
            out[(q[i], q[j])] = u[(i, j)];
        }
    }
    out
}

/// Computational basis state `|q⟩` (q ∈ 0..4, ordered `|00⟩, |01⟩, |10⟩, |11⟩`).
pub fn qubit_basis_state(q: usize) -> StateVector {
    let mut v = StateVector::zeros();
    v[PairBasis::QUBIT_INDICES[q]] = C64::new(1.0, 0.0);
    v
}

/// Atom-exchange permutation as a unitary on the pair space.
pub fn swap_permutation() -> Operator {
    let mut p = Operator::zeros();
    for i in 0..DIM {
        p[(PairBasis::swapped(i), i)] = C64::new(1.0, 0.0);
    }
    p
}

#[allow(dead_code)]
pub(crate) fn is_zero(op: &Operator) -> bool {
    op.iter().all(|z| *z == ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_abs(op: &Operator) -> f64 {
        op.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn pair_index_is_bijective() {
        let mut seen = [false; DIM];
        for a in LevelIndex::ALL {
            for b in LevelIndex::ALL {
                let i = PairBasis::index(a, b);
                assert!(!seen[i]);
                seen[i] = true;
                assert_eq!(PairBasis::levels(i), (a, b));
            }
        }
        assert_eq!(PairBasis::QUBIT_INDICES, [0, 1, 4, 5]);
        assert!(LevelIndex::new(4).is_err());
    }

    #[test]
    fn exchange_only_hamiltonian() {
        let cfg = SystemConfig::new(Scheme::A, 1.7).unwrap();
        let h = build_hamiltonian(&cfg, &ControlSnapshot::new(Scheme::A)).unwrap();
        let (p, q) = exchange_indices();
        assert_eq!((p, q), (11, 14));
        let nonzero: Vec<_> = (0..DIM)
            .flat_map(|i| (0..DIM).map(move |j| (i, j)))
            .filter(|&(i, j)| h[(i, j)] != ZERO)
            .collect();
        assert_eq!(nonzero, vec![(11, 14), (14, 11)]);
        assert_eq!(h[(11, 14)], C64::new(1.7, 0.0));
    }

    #[test]
    fn single_drive_structure() {
        let cfg = SystemConfig::new(Scheme::A, 0.0).unwrap();
        let snap = ControlSnapshot::new(Scheme::A).with_drive(DriveChannel::Ch1R, 2.0, 0.0);
        let h = build_hamiltonian(&cfg, &snap).unwrap();
        let mut count = 0;
        for i in 0..DIM {
            for j in 0..DIM {
                if h[(i, j)] != ZERO {
                    count += 1;
                    assert_eq!(h[(i, j)], C64::new(1.0, 0.0));
                    let (a1, a2) = PairBasis::levels(i);
                    let (b1, b2) = PairBasis::levels(j);
                    let one_r = |x: LevelIndex, y: LevelIndex| {
                        (x == LevelIndex::ONE && y == LevelIndex::RYD)
                            || (x == LevelIndex::RYD && y == LevelIndex::ONE)
                    };
                    assert!((a2 == b2 && one_r(a1, b1)) || (a1 == b1 && one_r(a2, b2)));
                }
            }
        }
        // 8 per atom: 4 spectator levels × (|r⟩⟨1| + |1⟩⟨r|).
        assert_eq!(count, 16);
        assert_eq!(max_abs(&(h - h.adjoint())), 0.0);
    }

    #[test]
    fn decay_diagonal_counts_rydberg_occupation() {
        let gamma = 0.3;
        let cfg = SystemConfig::new(Scheme::A, 0.0).unwrap().with_decay(gamma, 0.0).unwrap();
        let h = build_hamiltonian(&cfg, &ControlSnapshot::new(Scheme::A)).unwrap();
        for i in 0..DIM {
            let (a, b) = PairBasis::levels(i);
            let n_r = (a == LevelIndex::RYD) as u8 + (b == LevelIndex::RYD) as u8;
            assert_eq!(h[(i, i)], C64::new(0.0, -0.5 * gamma * n_r as f64));
            for j in 0..DIM {
                if i != j {
                    assert_eq!(h[(i, j)], ZERO);
                }
            }
        }
        assert_eq!(h[(10, 10)], C64::new(0.0, -gamma));
    }

    #[test]
    fn channel_scheme_mismatch_is_rejected() {
        let cfg = SystemConfig::new(Scheme::A, 1.0).unwrap();
        let snap = ControlSnapshot::new(Scheme::A).with_drive(DriveChannel::Ch01, 1.0, 0.0);
        assert!(matches!(build_hamiltonian(&cfg, &snap), Err(Error::ChannelNotAdmitted { .. })));
        let mut snap = ControlSnapshot::new(Scheme::A);
        snap.remove_drive(DriveChannel::Ch1R);
        assert!(matches!(build_hamiltonian(&cfg, &snap), Err(Error::ChannelMissing { .. })));
        let snap = ControlSnapshot::new(Scheme::A).with_drive(DriveChannel::Ch1R, -1.0, 0.0);
        assert!(build_hamiltonian(&cfg, &snap).is_err());
    }

    #[test]
    fn target_matrices() {
        let t = embed_target(PI).unwrap();
        let m = t.matrix();
        assert!((m[(1, 2)] - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!(m[(1, 1)].norm() < 1e-15);
        let h = embed_target(PI / 2.0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((h.matrix()[(1, 1)] - C64::new(r, 0.0)).norm() < 1e-15);
        assert!((h.matrix()[(2, 1)] - C64::new(0.0, r)).norm() < 1e-15);
        let tiny = embed_target(1e-300).unwrap();
        assert!((tiny.matrix() - QubitOperator::identity()).norm() < 1e-15);
        assert!(embed_target(0.0).is_err());
        assert!(embed_target(3.5).is_err());
    }

    #[test]
    fn projection_extracts_qubit_block() {
        assert_eq!(project_to_qubit(&Operator::identity()), QubitOperator::identity());
        let sevens = Operator::from_element(C64::new(7.0, 0.0));
        assert_eq!(project_to_qubit(&sevens), QubitOperator::from_element(C64::new(7.0, 0.0)));
    }
}
