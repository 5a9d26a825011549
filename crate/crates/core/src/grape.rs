//! Regularised gate cost, exact GRAPE gradients and the pulse optimizer.
//!
//! The cost is `(1 − F) + λ Σ_channels C_smooth` with
//! `C_smooth(f) = Σ_{i=0}^{N−2} ((f_{i+1} − f_i)/2)²`. Gradients of `F` follow
//! the adjoint recursion: forward-propagated qubit columns `X_k`, backward
//! co-states `Λ_k`, and the exact derivative of each segment exponential via
//! the eigenbasis divided differences of [`HermitianEig`].
//!
//! Optimisation runs in normalised units (`Ω_ref = omega0 = 1` for a fresh
//! problem). Rabi-modulated results are reported against their maximal Rabi
//! frequency: the stored pulse has `omega0 = max Ω` and `v_over_omega = V/max Ω`,
//! while `duration` stays in the units of the problem.

use std::collections::VecDeque;
use std::sync::Mutex;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    assemble_hamiltonian, raising_entries, ControlSnapshot, GateTarget, PairBasis,
    Scheme, SystemConfig, C64,
};
use crate::lbfgsb::{minimize, Bounds, LbfgsbOptions, Termination};
use crate::linalg::{adjoint_mul, mul, mul_adjoint, HermitianEig};
use crate::propagator::{
    exchange_phase, propagate, qubit_columns, Modulation, PulseProtocol, QubitColumns, DEFAULT_SUBSTEPS,
};
use crate::rng::{derive_seed, task_rng};

/// Smoothness weight. Large enough to keep N = 100 phase pulses free of
/// segment-to-segment jumps, small enough to leave 1 − F near 1e-10.
pub const DEFAULT_LAMBDA: f64 = 1e-5;

/// How the `Ω ≥ 0` constraint on Rabi controls is enforced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundsMode {
    /// Box constraints in the quasi-Newton solver.
    Box,
    /// Unconstrained optimisation of `g` with `Ω = g²`.
    Reparameterize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizationSettings {
    /// Smoothness weight λ.
    pub lambda: f64,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Projected-gradient infinity-norm stopping threshold.
    pub gradient_tolerance: f64,
    /// Relative cost-decrease stopping threshold (0 disables it).
    pub function_tolerance: f64,
    pub seed: u64,
    pub bounds_mode: BoundsMode,
    /// Random Rabi initial values are uniform on `[0, rabi_init · omega0]`.
    pub rabi_init: f64,
    /// Optional upper Rabi bound (absolute units of the problem).
    pub rabi_upper: Option<f64>,
    /// Weight of the optional `f₀² + f_{N−1}²` endpoint penalty on Rabi arrays.
    pub endpoint_penalty: f64,
    /// Stop a run, and skip remaining restarts, once the infidelity drops below this.
    pub target_infidelity: Option<f64>,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for OptimizationSettings {
    fn default() -> Self {
        OptimizationSettings {
            lambda: DEFAULT_LAMBDA,
            restarts: 1,
            max_iterations: 2000,
            gradient_tolerance: 1e-10,
            function_tolerance: 0.0,
            seed: 0,
            bounds_mode: BoundsMode::Box,
            rabi_init: 2.0,
            rabi_upper: None,
            endpoint_penalty: 0.0,
            target_infidelity: None,
            memory: 10,
        }
    }
}

impl OptimizationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::config("lambda must be finite and non-negative"));
        }
        if self.restarts == 0 {
            return Err(Error::config("restarts must be at least 1"));
        }
        if !(self.gradient_tolerance >= 0.0) || !(self.function_tolerance >= 0.0) {
            return Err(Error::config("tolerances must be non-negative"));
        }
        if !(self.rabi_init.is_finite() && self.rabi_init > 0.0) {
            return Err(Error::config("rabi_init must be positive"));
        }
        if let Some(u) = self.rabi_upper {
            if !(u > 0.0) {
                return Err(Error::config("rabi_upper must be positive"));
            }
        }
        if !(self.endpoint_penalty >= 0.0) {
            return Err(Error::config("endpoint_penalty must be non-negative"));
        }
        if self.memory == 0 {
            return Err(Error::config("memory must be at least 1"));
        }
        Ok(())
    }
}

/// Fixed data of one optimisation problem.
#[derive(Clone, Debug, PartialEq)]
pub struct GateProblem {
    pub scheme: Scheme,
    pub modulation: Modulation,
    pub duration: f64,
    pub segments: usize,
    pub v_dipole: f64,
    /// Rabi frequency for phase modulation and the reference scale for Rabi
    /// initialisation.
    pub omega0: f64,
    pub target: GateTarget,
}

impl GateProblem {
    /// Problem in units where `Ω_ref = 1`: duration `τΩ`, interaction `V/Ω`.
    pub fn normalized(
        scheme: Scheme,
        modulation: Modulation,
        tau_omega: f64,
        v_over_omega: f64,
        segments: usize,
        target: GateTarget,
    ) -> Result<Self> {
        let p = GateProblem { scheme, modulation, duration: tau_omega, segments, v_dipole: v_over_omega, omega0: 1.0, target };
        p.validate()?;
        Ok(p)
    }

    /// Problem reproducing the physical setting stored in `pulse`.
    pub fn from_pulse(pulse: &PulseProtocol, target: GateTarget) -> Self {
        GateProblem {
            scheme: pulse.scheme(),
            modulation: pulse.modulation(),
            duration: pulse.duration(),
            segments: pulse.segments(),
            v_dipole: pulse.v_over_omega() * pulse.omega0(),
            omega0: pulse.omega0(),
            target,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::input("duration must be positive"));
        }
        if self.segments < 2 {
            return Err(Error::input("at least 2 segments required"));
        }
        if !(self.v_dipole.is_finite() && self.v_dipole >= 0.0) {
            return Err(Error::input("v_dipole must be non-negative"));
        }
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::input("omega0 must be positive"));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.scheme.channels().len() * self.segments
    }

    fn config(&self) -> SystemConfig {
        SystemConfig { v_dipole: self.v_dipole, gamma_r: 0.0, gamma_rp: 0.0, scheme: self.scheme }
    }

    /// Pulse built from raw controls, reported against its own scale.
    fn pulse(&self, controls: &[f64]) -> Result<PulseProtocol> {
        let omega0 = match self.modulation {
            Modulation::Phase => self.omega0,
            Modulation::Rabi => {
                let m = controls.iter().copied().fold(0.0, f64::max);
                if m > 0.0 {
                    m
                } else {
                    self.omega0
                }
            }
        };
        PulseProtocol::from_parameters(
            self.scheme,
            self.modulation,
            self.duration,
            omega0,
            self.v_dipole / omega0,
            self.segments,
            controls,
        )
    }
}

/// `Σ_{i=0}^{N−2} ((f_{i+1} − f_i)/2)²`.
pub fn smoothness_cost(control: &[f64]) -> f64 {
    control.windows(2).map(|w| (0.5 * (w[1] - w[0])).powi(2)).sum()
}

/// Adds `weight · ∂C_smooth/∂f` to `out`.
fn add_smoothness_gradient(control: &[f64], weight: f64, out: &mut [f64]) {
    for i in 0..control.len().saturating_sub(1) {
        let half = 0.5 * (control[i + 1] - control[i]);
        out[i] -= weight * half;
        out[i + 1] += weight * half;
    }
}

/// Infidelity and its exact gradient for the noise-free, decay-free system.
struct FidelityModel<'a> {
    problem: &'a GateProblem,
    entries: Vec<[(usize, usize); 8]>,
    weighted_target: QubitColumns,
}

impl<'a> FidelityModel<'a> {
    fn new(problem: &'a GateProblem) -> Self {
        let entries = problem.scheme.channels().iter().map(|&ch| raising_entries(ch)).collect();
        let mut w = QubitColumns::zeros();
        for (i, &row) in PairBasis::QUBIT_INDICES.iter().enumerate() {
            for j in 0..4 {
                w[(row, j)] = problem.target.matrix()[(i, j)];
            }
        }
        FidelityModel { problem, entries, weighted_target: w }
    }

    fn snapshot(&self, controls: &[f64], k: usize) -> ControlSnapshot {
        let p = self.problem;
        let mut snap = ControlSnapshot::new(p.scheme);
        for (c, &ch) in p.scheme.channels().iter().enumerate() {
            let v = controls[c * p.segments + k];
            snap = match p.modulation {
                Modulation::Rabi => snap.with_drive(ch, v, 0.0),
                Modulation::Phase => snap.with_drive(ch, p.omega0, v),
            };
        }
        snap
    }

    /// Returns `1 − F`; writes `∂(1 − F)/∂controls` into `grad` when given.
    ///
    /// Propagators are never formed: with `H_k = V Λ V†`, the forward step is
    /// `X_k = V (e ∘ V† X_{k−1})` and the co-state step `Λ_{k−1} = V (ē ∘ V† Λ_k)`.
    /// The derivative of `g = tr(W† U P)` along `dH` is `tr(dH Q)` with
    /// `Q = V (Φᵀ ∘ (V† X_{k−1})(V† Λ_k)†) V†`, of which only the entries on
    /// the drive couplings are evaluated.
    fn infidelity(&self, controls: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let p = self.problem;
        let n = p.segments;
        let dt = p.duration / n as f64;
        let want_grad = grad.is_some();
        let mut eigs = Vec::with_capacity(if want_grad { n } else { 0 });
        let mut rotated = Vec::with_capacity(if want_grad { n } else { 0 });
        let mut x = qubit_columns();
        for k in 0..n {
            let h = assemble_hamiltonian(p.v_dipole, 0.0, 0.0, &self.snapshot(controls, k));
            let eig = HermitianEig::new(&h);
            let mut a = adjoint_mul(&eig.vectors, &x);
            let phases = eig.phases(dt);
            let a_prev = a;
            for (i, e) in phases.iter().enumerate() {
                a.row_mut(i).iter_mut().for_each(|z| *z *= e);
            }
            x = mul(&eig.vectors, &a);
            if want_grad {
                rotated.push(a_prev);
                eigs.push((eig, phases));
            }
        }
        let overlap: C64 = self.weighted_target.iter().zip(x.iter()).map(|(w, v)| w.conj() * v).sum();
        let fidelity = overlap.norm() / 4.0;
        let Some(grad) = grad else {
            return 1.0 - fidelity;
        };
        grad.iter_mut().for_each(|g| *g = 0.0);
        if overlap.norm() == 0.0 {
            return 1.0 - fidelity;
        }
        let scale = overlap.conj() / (4.0 * overlap.norm());
        let mut lambda = self.weighted_target;
        for k in (0..n).rev() {
            let (eig, phases) = &eigs[k];
            let v = &eig.vectors;
            let mut b = adjoint_mul(v, &lambda);
            let m_eig = mul_adjoint(&rotated[k], &b);
            let q_eig = eig.divided_differences_from(phases, dt).transpose().component_mul(&m_eig);
            let t = mul(v, &q_eig);
            // Q[(row, col)] = Σ_j T[(row, j)] · conj(V[(col, j)]).
            let q = |row: usize, col: usize| -> C64 { t.row(row).iter().zip(v.row(col).iter()).map(|(a, b)| a * b.conj()).sum() };
            for (c, entries) in self.entries.iter().enumerate() {
                let (mut up, mut down) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for &(r, col) in entries {
                    up += q(col, r);
                    down += q(r, col);
                }
                let value = controls[c * n + k];
                let dg = match p.modulation {
                    Modulation::Rabi => 0.5 * (up + down),
                    Modulation::Phase => {
                        let e = C64::from_polar(1.0, value);
                        C64::new(0.0, 0.5 * p.omega0) * (e * up - e.conj() * down)
                    }
                };
                grad[c * n + k] = -(scale * dg).re;
            }
            for (i, e) in phases.iter().enumerate() {
                b.row_mut(i).iter_mut().for_each(|z| *z *= e.conj());
            }
            lambda = mul(v, &b);
        }
        1.0 - fidelity
    }
}

/// Full regularised cost and its gradient with respect to the raw controls.
struct CostModel<'a> {
    fidelity: FidelityModel<'a>,
    lambda: f64,
    endpoint_penalty: f64,
}

impl<'a> CostModel<'a> {
    fn new(problem: &'a GateProblem, lambda: f64, endpoint_penalty: f64) -> Self {
        CostModel { fidelity: FidelityModel::new(problem), lambda, endpoint_penalty }
    }

    fn problem(&self) -> &GateProblem {
        self.fidelity.problem
    }

    fn penalty(&self, controls: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let n = self.problem().segments;
        let rabi = self.problem().modulation == Modulation::Rabi;
        let mut total = 0.0;
        let mut grad = grad;
        for (c, chunk) in controls.chunks(n).enumerate() {
            total += self.lambda * smoothness_cost(chunk);
            if rabi && self.endpoint_penalty > 0.0 {
                total += self.endpoint_penalty * (chunk[0].powi(2) + chunk[n - 1].powi(2));
            }
            if let Some(g) = grad.as_deref_mut() {
                let slot = &mut g[c * n..(c + 1) * n];
                add_smoothness_gradient(chunk, self.lambda, slot);
                if rabi && self.endpoint_penalty > 0.0 {
                    slot[0] += 2.0 * self.endpoint_penalty * chunk[0];
                    slot[n - 1] += 2.0 * self.endpoint_penalty * chunk[n - 1];
                }
            }
        }
        total
    }

    /// `(cost, infidelity)`; fills `grad` if given.
    fn evaluate(&self, controls: &[f64], grad: Option<&mut [f64]>) -> (f64, f64) {
        match grad {
            Some(g) => {
                let infid = self.fidelity.infidelity(controls, Some(g));
                let pen = self.penalty(controls, Some(g));
                (infid + pen, infid)
            }
            None => {
                let infid = self.fidelity.infidelity(controls, None);
                (infid + self.penalty(controls, None), infid)
            }
        }
    }
}

fn check_pulse(config: &SystemConfig, pulse: &PulseProtocol) -> Result<()> {
    config.validate()?;
    pulse.validate()?;
    if config.scheme != pulse.scheme() {
        return Err(Error::config("pulse scheme does not match system scheme"));
    }
    Ok(())
}

fn problem_for(config: &SystemConfig, pulse: &PulseProtocol, target: &GateTarget) -> GateProblem {
    GateProblem {
        scheme: pulse.scheme(),
        modulation: pulse.modulation(),
        duration: pulse.duration(),
        segments: pulse.segments(),
        v_dipole: config.v_dipole,
        omega0: pulse.omega0(),
        target: *target,
    }
}

/// `(1 − F) + λ Σ C_smooth` for the noise-free propagation (decay rates in
/// `config` are ignored).
pub fn total_cost(config: &SystemConfig, pulse: &PulseProtocol, target: &GateTarget, lambda: f64) -> Result<f64> {
    check_pulse(config, pulse)?;
    let problem = problem_for(config, pulse, target);
    Ok(CostModel::new(&problem, lambda, 0.0).evaluate(&pulse.parameters(), None).0)
}

/// Exact gradient of [`total_cost`] in the layout of [`PulseProtocol::parameters`].
pub fn gradient(config: &SystemConfig, pulse: &PulseProtocol, target: &GateTarget, lambda: f64) -> Result<Vec<f64>> {
    check_pulse(config, pulse)?;
    let problem = problem_for(config, pulse, target);
    let params = pulse.parameters();
    let mut grad = vec![0.0; params.len()];
    CostModel::new(&problem, lambda, 0.0).evaluate(&params, Some(&mut grad));
    Ok(grad)
}

/// Starting point of an optimisation.
#[derive(Clone, Debug, PartialEq)]
pub enum Ansatz {
    Random,
    WarmStart(PulseProtocol),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRecord {
    pub pulse: PulseProtocol,
    /// Exchange angle of the target.
    pub theta: f64,
    pub infidelity: f64,
    pub cost: f64,
    pub t_int: f64,
    pub t_ryd: f64,
    pub theta_dipole: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Master seed and task stream index (see [`crate::rng`]).
    pub seed: u64,
    pub stream: u64,
    pub converged: bool,
    pub termination: String,
    /// Set by θ-continuation when a step misses its infidelity threshold.
    #[serde(default)]
    pub flagged: bool,
}

impl OptimizationRecord {
    /// Gate duration in units of the maximal Rabi frequency, `τ Ω`.
    pub fn tau_omega(&self) -> f64 {
        self.pulse.duration() * self.pulse.omega0()
    }

    pub fn v_over_omega(&self) -> f64 {
        self.pulse.v_over_omega()
    }

    /// `T_ryd Ω` with Ω the maximal Rabi frequency.
    pub fn t_ryd_omega(&self) -> f64 {
        self.t_ryd * self.pulse.omega0()
    }
}

fn initial_controls(problem: &GateProblem, settings: &OptimizationSettings, ansatz: &Ansatz, rng: &mut impl Rng) -> Result<Vec<f64>> {
    match ansatz {
        Ansatz::WarmStart(pulse) => {
            if pulse.scheme() != problem.scheme
                || pulse.modulation() != problem.modulation
                || pulse.segments() != problem.segments
            {
                return Err(Error::input("warm-start pulse does not match the problem layout"));
            }
            Ok(pulse.parameters())
        }
        Ansatz::Random => {
            let n = problem.parameter_count();
            Ok(match problem.modulation {
                Modulation::Phase => (0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect(),
                Modulation::Rabi => {
                    let mut hi = settings.rabi_init * problem.omega0;
                    if let Some(u) = settings.rabi_upper {
                        hi = hi.min(u);
                    }
                    (0..n).map(|_| rng.random_range(0.0..hi)).collect()
                }
            })
        }
    }
}

/// Single optimisation run on random stream `stream` below `settings.seed`.
pub fn optimize_stream(
    problem: &GateProblem,
    settings: &OptimizationSettings,
    ansatz: &Ansatz,
    stream: u64,
) -> Result<OptimizationRecord> {
    problem.validate()?;
    settings.validate()?;
    let mut rng = task_rng(settings.seed, &[stream]);
    let controls0 = initial_controls(problem, settings, ansatz, &mut rng)?;
    let model = CostModel::new(problem, settings.lambda, settings.endpoint_penalty);
    let n = controls0.len();
    let rabi = problem.modulation == Modulation::Rabi;
    let reparam = rabi && settings.bounds_mode == BoundsMode::Reparameterize;

    let to_controls = |x: &[f64]| -> Vec<f64> {
        if reparam {
            x.iter().map(|g| g * g).collect()
        } else {
            x.to_vec()
        }
    };
    let x0: Vec<f64> = if reparam { controls0.iter().map(|v| v.max(0.0).sqrt()).collect() } else { controls0 };
    let bounds = if rabi && !reparam {
        Bounds::uniform(n, 0.0, settings.rabi_upper.unwrap_or(f64::INFINITY))
    } else if reparam {
        let u = settings.rabi_upper.map_or(f64::INFINITY, f64::sqrt);
        Bounds::uniform(n, -u, u)
    } else {
        Bounds::unbounded(n)
    };

    // Recent (x, infidelity) pairs so the callback can test the target.
    let recent: Mutex<VecDeque<(Vec<f64>, f64)>> = Mutex::new(VecDeque::with_capacity(8));
    let objective = |x: &[f64], g: &mut [f64]| -> f64 {
        let controls = to_controls(x);
        let (cost, infid) = model.evaluate(&controls, Some(g));
        if reparam {
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi *= 2.0 * xi;
            }
        }
        let mut r = recent.lock().expect("objective cache poisoned");
        if r.len() == 8 {
            r.pop_front();
        }
        r.push_back((x.to_vec(), infid));
        cost
    };
    let target = settings.target_infidelity;
    let callback = |_: usize, x: &[f64], _: f64| -> bool {
        let Some(t) = target else { return false };
        let r = recent.lock().expect("objective cache poisoned");
        r.iter().rev().find(|(xx, _)| xx.as_slice() == x).is_some_and(|(_, infid)| *infid < t)
    };
    let opts = LbfgsbOptions {
        memory: settings.memory,
        max_iterations: settings.max_iterations,
        gradient_tolerance: settings.gradient_tolerance,
        function_tolerance: settings.function_tolerance,
        ..LbfgsbOptions::default()
    };
    let result = minimize(objective, &x0, &bounds, &opts, callback);

    let controls = to_controls(&result.x);
    let (cost, infidelity) = model.evaluate(&controls, None);
    let pulse = problem.pulse(&controls)?;
    let config = problem.config();
    let evolution = propagate(&config, &pulse, DEFAULT_SUBSTEPS)?;
    let converged = matches!(
        result.termination,
        Termination::GradientTolerance | Termination::FunctionTolerance | Termination::Callback
    );
    Ok(OptimizationRecord {
        theta: problem.target.theta(),
        infidelity: infidelity.clamp(0.0, 1.0),
        cost,
        t_int: evolution.t_int,
        t_ryd: evolution.t_ryd,
        theta_dipole: exchange_phase(&evolution, &config),
        iterations: result.iterations,
        evaluations: result.evaluations,
        seed: settings.seed,
        stream,
        converged,
        termination: format!("{:?}", result.termination),
        flagged: false,
        pulse,
    })
}

/// Best of `settings.restarts` runs; restart `r` uses stream `r`.
///
/// With a warm start, restart 0 starts from the given pulse and later
/// restarts are random. When `target_infidelity` is set, restarts are run in
/// index order (in parallel batches) and the first run reaching the target is
/// returned, so the outcome does not depend on the thread count.
pub fn optimize(problem: &GateProblem, settings: &OptimizationSettings, ansatz: &Ansatz) -> Result<OptimizationRecord> {
    settings.validate()?;
    let run = |r: usize| -> Result<OptimizationRecord> {
        let a = if r == 0 { ansatz.clone() } else { Ansatz::Random };
        optimize_stream(problem, settings, &a, r as u64)
    };
    let better = |a: &OptimizationRecord, b: &OptimizationRecord| b.infidelity < a.infidelity;

    let batch = match settings.target_infidelity {
        Some(_) => rayon::current_num_threads().max(1),
        None => settings.restarts,
    };
    let mut best: Option<OptimizationRecord> = None;
    let mut start = 0;
    while start < settings.restarts {
        let end = (start + batch).min(settings.restarts);
        let records: Vec<OptimizationRecord> = (start..end).into_par_iter().map(run).collect::<Result<_>>()?;
        if let Some(t) = settings.target_infidelity {
            if let Some(hit) = records.iter().find(|r| r.infidelity < t) {
                return Ok(hit.clone());
            }
        }
        for rec in records {
            if best.as_ref().is_none_or(|b| better(b, &rec)) {
                best = Some(rec);
            }
        }
        start = end;
    }
    best.ok_or_else(|| Error::config("no restarts were run"))
}

/// Grid specification for landscape sweeps (normalised units).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub scheme: Scheme,
    pub modulation: Modulation,
    pub segments: usize,
    pub theta: f64,
    /// `τΩ` grid.
    pub durations: Vec<f64>,
    /// `V/Ω` grid.
    pub v_over_omega: Vec<f64>,
    pub runs_per_point: usize,
}

/// One single-restart optimisation per (duration, V/Ω, run).
///
/// Task `(i, j, run)` uses stream `run + runs · (j + n_v · i)` below the master
/// seed, so a one-point, one-run sweep equals [`optimize`] with one restart.
/// Records come back in grid order.
pub fn landscape_sweep(spec: &SweepSpec, settings: &OptimizationSettings) -> Result<Vec<OptimizationRecord>> {
    if spec.durations.is_empty() || spec.v_over_omega.is_empty() || spec.runs_per_point == 0 {
        return Err(Error::input("sweep grids must be non-empty"));
    }
    settings.validate()?;
    let target = crate::hilbert::embed_target(spec.theta)?;
    let nv = spec.v_over_omega.len();
    let runs = spec.runs_per_point;
    let total = spec.durations.len() * nv * runs;
    (0..total)
        .into_par_iter()
        .map(|task| {
            let j = (task / runs) % nv;
            let i = task / (runs * nv);
            let problem = GateProblem::normalized(
                spec.scheme,
                spec.modulation,
                spec.durations[i],
                spec.v_over_omega[j],
                spec.segments,
                target,
            )?;
            optimize_stream(&problem, settings, &Ansatz::Random, task as u64)
        })
        .collect()
}

/// Smallest duration whose best infidelity is below `threshold` while the
/// preceding grid point's best is above `upper`.
///
/// Records are grouped by their problem duration (ascending). If the first
/// grid point already passes, it is returned.
pub fn detect_speed_limit(records: &[OptimizationRecord], threshold: f64, upper: f64) -> Option<f64> {
    let mut best: Vec<(f64, f64)> = Vec::new();
    for r in records {
        let d = r.pulse.duration();
        match best.iter_mut().find(|(x, _)| *x == d) {
            Some(entry) => entry.1 = entry.1.min(r.infidelity),
            None => best.push((d, r.infidelity)),
        }
    }
    best.sort_by(|a, b| a.0.total_cmp(&b.0));
    for i in 0..best.len() {
        if best[i].1 < threshold && (i == 0 || best[i - 1].1 > upper) {
            return Some(best[i].0);
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationOptions {
    /// Infidelity each step must reach.
    pub threshold: f64,
    /// Multiplicative duration increase tried when a step misses the threshold.
    pub duration_growth: f64,
    pub max_duration_steps: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions { threshold: 1e-6, duration_growth: 1.05, max_duration_steps: 20 }
    }
}

/// Sequential warm-started optimisation along a descending θ grid.
///
/// The maximal Rabi frequency of the seed is held fixed as an upper bound
/// (Rabi modulation). Each step first tries the previous duration and then
/// lengthens it by `duration_growth` until the threshold is met; a step that
/// never meets it is returned flagged and the continuation proceeds from it.
pub fn continuation_theta(
    seed: &OptimizationRecord,
    thetas: &[f64],
    settings: &OptimizationSettings,
    options: &ContinuationOptions,
) -> Result<Vec<OptimizationRecord>> {
    if seed.infidelity >= options.threshold.max(1e-6) {
        return Err(Error::input(format!("seed infidelity {:.3e} is not converged", seed.infidelity)));
    }
    let v_dipole = seed.pulse.v_over_omega() * seed.pulse.omega0();
    let omega_max = seed.pulse.max_rabi();
    let mut step_settings = settings.clone();
    step_settings.restarts = 1;
    if seed.pulse.modulation() == Modulation::Rabi {
        step_settings.rabi_upper = Some(omega_max);
    }

    let mut records = Vec::with_capacity(thetas.len());
    let mut current = seed.clone();
    for (step, &theta) in thetas.iter().enumerate() {
        if (theta - current.theta).abs() <= 1e-15 {
            records.push(current.clone());
            continue;
        }
        let target = crate::hilbert::embed_target(theta)?;
        let mut best: Option<OptimizationRecord> = None;
        for m in 0..=options.max_duration_steps {
            let duration = current.pulse.duration() * options.duration_growth.powi(m as i32);
            let warm = current.pulse.with_duration(duration)?;
            let problem = GateProblem {
                scheme: warm.scheme(),
                modulation: warm.modulation(),
                duration,
                segments: warm.segments(),
                v_dipole,
                omega0: warm.omega0(),
                target,
            };
            let mut s = step_settings.clone();
            s.seed = derive_seed(settings.seed, &[step as u64, m as u64]);
            let rec = optimize_stream(&problem, &s, &Ansatz::WarmStart(warm), 0)?;
            let ok = rec.infidelity < options.threshold;
            if best.as_ref().is_none_or(|b| rec.infidelity < b.infidelity) {
                best = Some(rec);
            }
            if ok {
                break;
            }
        }
        let mut rec = best.expect("at least one duration is tried");
        rec.flagged = rec.infidelity >= options.threshold;
        current = rec.clone();
        records.push(rec);
    }
    Ok(records)
}
