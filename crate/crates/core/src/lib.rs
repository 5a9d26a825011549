//! Pulse synthesis and noise analysis for native iSWAP and exchange gates
//! on two dipole-coupled Rydberg atoms.
//!
//! The crate is organised bottom-up:
//!
//! * [`hilbert`] – the two-atom, four-level state space, Hamiltonian assembly
//!   and the exchange-gate target.
//! * [`propagator`] – piecewise-constant time evolution, gate fidelity and the
//!   `T_int` / `T_ryd` time diagnostics.
//! * [`grape`] – regularised cost, exact gradients and the quasi-Newton pulse
//!   optimizer with restarts, landscape sweeps and θ-continuation.
//! * [`noise`] – Monte-Carlo sampling of motional, decay and laser noise, and
//!   per-source infidelity budgets.
//! * [`frt`] – fidelity response functions for laser phase and intensity noise.
//!
//! Units: ħ = 1 and every frequency is an angular frequency. Any consistent
//! time unit works; the optimizer runs in units where the reference Rabi
//! frequency is 1 and pulses are rescaled to physical units afterwards.

pub mod error;
pub mod frt;
pub mod grape;
pub mod hilbert;
pub mod linalg;
pub mod lbfgsb;
pub mod noise;
pub mod propagator;
pub mod rng;
pub mod sum;

pub use error::{Error, Result};
pub use hilbert::{
    build_hamiltonian, embed_target, project_to_qubit, ControlSnapshot, Detunings, DriveChannel,
    Drive, GateTarget, LevelIndex, Scheme, SystemConfig,
};
pub use propagator::{
    exchange_phase, gate_fidelity, propagate, EvolutionResult, Modulation, PulseProtocol,
};
