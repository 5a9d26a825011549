//! Fidelity response theory for laser phase and intensity noise.
//!
//! A noise term `h(t) Ô(t)` added to the noise-free Hamiltonian degrades the
//! fidelity to first order by `∫ S(f) I(f) df` with the response function
//!
//! `I(f) = ∬ dt dτ cos(2πf(t−τ)) ⟨Ô_H(t) Ô_H(τ)⟩_c`.
//!
//! With `A(f) = ∫ dt e^{−i2πft} Ô_H(t)` this equals
//! `Re[⟨A A†⟩ + ⟨A† A⟩]/2 − |⟨A⟩|²`, which costs one pass over the
//! trajectory per frequency instead of a double sum. [`response_function_direct`]
//! keeps the double sum as a reference.
//!
//! Ô_H is sampled at substep midpoints (midpoint quadrature).

use nalgebra::{Dyn, OMatrix, U16};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    assemble_hamiltonian, qubit_basis_state, raising_entries, ControlSnapshot, DriveChannel, Operator, StateVector,
    SystemConfig, C64, DIM,
};
use crate::linalg::HermitianEig;
use crate::noise::{PsdKind, PsdTable};
use crate::propagator::PulseProtocol;

type Columns = OMatrix<C64, U16, Dyn>;

/// Noise operator selector: laser phase or intensity noise on one channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NoiseOperatorKind {
    pub kind: PsdKind,
    pub channel: DriveChannel,
}

/// How expectation values `⟨·⟩` are taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateAverage {
    /// Connected correlator per computational basis state, averaged uniformly.
    BasisAverage,
    /// Connected correlator per given pure state, averaged uniformly.
    StateList(Vec<Vec<[f64; 2]>>),
    /// Connected correlator in the mixed state `P/4` on the qubit subspace.
    /// For noise synthesised as `Σ 2 sqrt(S Δf) cos(2πft + φ)` (variance
    /// `Σ 2 S Δf`), `∫ S I df` is then the first-order expectation of the gate
    /// infidelity `1 − |tr(T† P U P)|/4`.
    GateAverage,
}

impl StateAverage {
    fn states(&self) -> Result<Vec<StateVector>> {
        match self {
            StateAverage::BasisAverage | StateAverage::GateAverage => Ok((0..4).map(qubit_basis_state).collect()),
            StateAverage::StateList(list) => {
                if list.is_empty() {
                    return Err(Error::input("state list is empty"));
                }
                list.iter()
                    .map(|s| {
                        if s.len() != DIM {
                            return Err(Error::input(format!("state has {} amplitudes, expected {DIM}", s.len())));
                        }
                        let v = StateVector::from_iterator(s.iter().map(|z| C64::new(z[0], z[1])));
                        let norm = v.norm();
                        if !(norm.is_finite() && norm > 0.0) {
                            return Err(Error::input("state has zero or non-finite norm"));
                        }
                        Ok(v / C64::from(norm))
                    })
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelResponse {
    pub operator: NoiseOperatorKind,
    pub values: Vec<f64>,
}

/// Response functions of several noise operators on a common frequency grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseSpectrum {
    /// Ascending; in inverse units of the pulse time axis (Hz for SI pulses).
    pub frequencies: Vec<f64>,
    pub responses: Vec<ChannelResponse>,
    pub state_average: StateAverage,
}

impl ResponseSpectrum {
    pub fn get(&self, operator: NoiseOperatorKind) -> Option<&[f64]> {
        self.responses.iter().find(|r| r.operator == operator).map(|r| r.values.as_slice())
    }
}

/// Phase kind: `(Ω/2) Σ_i i(e^{iφ}|b⟩⟨a| − h.c.)`; intensity kind:
/// `(Ω/4) Σ_i (e^{iφ}|b⟩⟨a| + h.c.)`. Zero when the channel is not driven.
pub fn noise_operator(kind: PsdKind, channel: DriveChannel, snapshot: &ControlSnapshot) -> Operator {
    let mut op = Operator::zeros();
    let Some(drive) = snapshot.drive(channel) else {
        return op;
    };
    let e = C64::from_polar(1.0, drive.phase);
    let z = match kind {
        PsdKind::Phase => C64::i() * e * (0.5 * drive.rabi),
        PsdKind::Intensity => e * (0.25 * drive.rabi),
    };
    for (row, col) in raising_entries(channel) {
        op[(row, col)] += z;
        op[(col, row)] += z.conj();
    }
    op
}

/// Per-segment data of the noise-free trajectory in the segment eigenbasis.
struct SegmentFrame {
    values: [f64; DIM],
    /// `V† U(t_k)`.
    w: Operator,
    /// `V† U(t_k) S` for the averaging states `S`.
    ws: Columns,
    /// Noise operator in the eigenbasis, `V† Ô V`.
    o: Operator,
    start: f64,
}

struct Trajectory {
    frames: Vec<SegmentFrame>,
    sub_dt: f64,
    substeps: usize,
}

fn state_columns(states: &[StateVector]) -> Columns {
    Columns::from_fn(states.len(), |r, c| states[c][r])
}

fn check(config: &SystemConfig, pulse: &PulseProtocol, operator: NoiseOperatorKind, substeps: usize) -> Result<()> {
    config.validate()?;
    pulse.validate()?;
    if config.scheme != pulse.scheme() {
        return Err(Error::config("pulse scheme does not match system scheme"));
    }
    if !pulse.scheme().admits(operator.channel) {
        return Err(Error::ChannelNotAdmitted { channel: operator.channel, scheme: pulse.scheme() });
    }
    if substeps == 0 {
        return Err(Error::input("substeps must be at least 1"));
    }
    Ok(())
}

fn trajectory(
    config: &SystemConfig,
    pulse: &PulseProtocol,
    operator: NoiseOperatorKind,
    states: &[StateVector],
    substeps: usize,
) -> Trajectory {
    let s = state_columns(states);
    let dt = pulse.segment_duration();
    let mut u = Operator::identity();
    let mut frames = Vec::with_capacity(pulse.segments());
    for k in 0..pulse.segments() {
        let snap = pulse.snapshot(k);
        let h = assemble_hamiltonian(config.v_dipole, 0.0, 0.0, &snap);
        let eig = HermitianEig::new(&h);
        let vt = eig.vectors.adjoint();
        let w = vt * u;
        let op = noise_operator(operator.kind, operator.channel, &snap);
        frames.push(SegmentFrame {
            values: eig.values,
            ws: &w * &s,
            w,
            o: vt * op * eig.vectors,
            start: k as f64 * dt,
        });
        u = eig.propagator(dt) * u;
    }
    Trajectory { frames, sub_dt: dt / substeps as f64, substeps }
}

impl Trajectory {
    /// Columns `A(f) S`.
    fn transform(&self, f: f64) -> Columns {
        let omega = std::f64::consts::TAU * f;
        let h = self.sub_dt;
        let mut acc = Columns::zeros(self.frames[0].ws.ncols());
        for fr in &self.frames {
            // Midpoint sum Σ_j h e^{−iω(t_k + s_j)} e^{i(λa − λb) s_j}, s_j = (j + ½)h.
            let base = C64::from_polar(h, -omega * fr.start);
            let mut m = Operator::zeros();
            for a in 0..DIM {
                for b in 0..DIM {
                    let o = fr.o[(a, b)];
                    if o == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let x = fr.values[a] - fr.values[b] - omega;
                    let rot = C64::from_polar(1.0, x * h);
                    let mut z = C64::from_polar(1.0, 0.5 * x * h);
                    let mut sum = C64::new(0.0, 0.0);
                    for _ in 0..self.substeps {
                        sum += z;
                        z *= rot;
                    }
                    m[(a, b)] = o * sum * base;
                }
            }
            acc += fr.w.adjoint() * (m * &fr.ws);
        }
        acc
    }
}

fn combine(average: &StateAverage, states: &[StateVector], plus: &Columns, minus: &Columns) -> f64 {
    // plus = A(f) S, minus = A(−f) S = A(f)† S.
    let n = states.len() as f64;
    let mut second = 0.0;
    let mut first = Vec::with_capacity(states.len());
    for (c, psi) in states.iter().enumerate() {
        let ap = plus.column(c);
        let am = minus.column(c);
        second += 0.5 * (ap.norm_squared() + am.norm_squared());
        first.push(psi.dotc(&ap));
    }
    match average {
        StateAverage::GateAverage => {
            let mean: C64 = first.iter().sum::<C64>() / n;
            second / n - mean.norm_sqr()
        }
        _ => (second - first.iter().map(|z| z.norm_sqr()).sum::<f64>()) / n,
    }
}

/// `I(f)` of one noise operator on the given grid.
pub fn response_function(
    config: &SystemConfig,
    pulse: &PulseProtocol,
    operator: NoiseOperatorKind,
    frequencies: &[f64],
    average: &StateAverage,
    substeps: usize,
) -> Result<Vec<f64>> {
    check(config, pulse, operator, substeps)?;
    let states = average.states()?;
    let traj = trajectory(config, pulse, operator, &states, substeps);
    Ok(frequencies
        .par_iter()
        .map(|&f| combine(average, &states, &traj.transform(f), &traj.transform(-f)))
        .collect())
}

/// Reference evaluation by the explicit double sum over midpoint pairs.
pub fn response_function_direct(
    config: &SystemConfig,
    pulse: &PulseProtocol,
    operator: NoiseOperatorKind,
    frequencies: &[f64],
    average: &StateAverage,
    substeps: usize,
) -> Result<Vec<f64>> {
    check(config, pulse, operator, substeps)?;
    let states = average.states()?;
    let dt = pulse.segment_duration();
    let h = dt / substeps as f64;
    let mut times = Vec::new();
    let mut heis = Vec::new();
    let mut u = Operator::identity();
    for k in 0..pulse.segments() {
        let snap = pulse.snapshot(k);
        let ham = assemble_hamiltonian(config.v_dipole, 0.0, 0.0, &snap);
        let op = noise_operator(operator.kind, operator.channel, &snap);
        for j in 0..substeps {
            let s = (j as f64 + 0.5) * h;
            let ut = crate::linalg::propagator(&ham, s) * u;
            times.push(k as f64 * dt + s);
            heis.push(ut.adjoint() * op * ut);
        }
        u = crate::linalg::propagator(&ham, dt) * u;
    }
    let n = states.len() as f64;
    let mean_of = |m: &Operator| -> Vec<C64> { states.iter().map(|psi| psi.dotc(&(m * psi))).collect() };
    let singles: Vec<Vec<C64>> = heis.iter().map(mean_of).collect();
    Ok(frequencies
        .iter()
        .map(|&f| {
            let omega = std::f64::consts::TAU * f;
            let mut total = 0.0;
            for (a, oa) in heis.iter().enumerate() {
                for (b, ob) in heis.iter().enumerate() {
                    let w = h * h * (omega * (times[a] - times[b])).cos();
                    let pair = mean_of(&(oa * ob));
                    let corr = match average {
                        StateAverage::GateAverage => {
                            let ma: C64 = singles[a].iter().sum::<C64>() / n;
                            let mb: C64 = singles[b].iter().sum::<C64>() / n;
                            pair.iter().sum::<C64>() / n - ma * mb
                        }
                        _ => pair.iter().zip(&singles[a]).zip(&singles[b]).map(|((p, x), y)| p - x * y).sum::<C64>() / n,
                    };
                    total += w * corr.re;
                }
            }
            total
        })
        .collect())
}

/// Response functions for several operators, computed concurrently.
pub fn response_spectrum(
    config: &SystemConfig,
    pulse: &PulseProtocol,
    operators: &[NoiseOperatorKind],
    frequencies: &[f64],
    average: &StateAverage,
    substeps: usize,
) -> Result<ResponseSpectrum> {
    if frequencies.windows(2).any(|w| !(w[1] > w[0])) || frequencies.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::input("frequency grid must be finite, non-negative and ascending"));
    }
    let responses = operators
        .par_iter()
        .map(|&op| {
            Ok(ChannelResponse { operator: op, values: response_function(config, pulse, op, frequencies, average, substeps)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResponseSpectrum { frequencies: frequencies.to_vec(), responses, state_average: average.clone() })
}

/// Phase and intensity operators for every channel of the pulse's scheme.
pub fn all_operators(pulse: &PulseProtocol, kinds: &[PsdKind]) -> Vec<NoiseOperatorKind> {
    kinds
        .iter()
        .flat_map(|&kind| pulse.scheme().channels().iter().map(move |&channel| NoiseOperatorKind { kind, channel }))
        .collect()
}

/// `Σ_channels ∫ S(f) I(f) df` by the trapezoid rule over the spectrum grid,
/// restricted to operators of the PSD's kind.
pub fn frt_infidelity(spectrum: &ResponseSpectrum, psd: &PsdTable) -> f64 {
    let f = &spectrum.frequencies;
    if let (Some(lo), Some(hi)) = (f.first(), f.last()) {
        if !psd.covers(*lo, *hi) {
            log::warn!(
                "PSD spans [{:.3e}, {:.3e}] but the response grid spans [{:.3e}, {:.3e}]; zero beyond the table",
                psd.frequencies()[0],
                psd.max_frequency(),
                lo,
                hi
            );
        }
    }
    let s: Vec<f64> = f.iter().map(|&x| psd.density(x)).collect();
    spectrum
        .responses
        .iter()
        .filter(|r| r.operator.kind == psd.kind)
        .map(|r| {
            (1..f.len()).map(|i| 0.5 * (f[i] - f[i - 1]) * (s[i] * r.values[i] + s[i - 1] * r.values[i - 1])).sum::<f64>()
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroFrequencyResponse {
    pub channel: DriveChannel,
    pub phase: f64,
    pub intensity: f64,
}

/// `I_phase(0)` and `I_intensity(0)` per channel.
pub fn zero_frequency_audit(
    config: &SystemConfig,
    pulse: &PulseProtocol,
    average: &StateAverage,
    substeps: usize,
) -> Result<Vec<ZeroFrequencyResponse>> {
    pulse
        .scheme()
        .channels()
        .iter()
        .map(|&channel| {
            let at_zero = |kind| -> Result<f64> {
                Ok(response_function(config, pulse, NoiseOperatorKind { kind, channel }, &[0.0], average, substeps)?[0])
            };
            Ok(ZeroFrequencyResponse { channel, phase: at_zero(PsdKind::Phase)?, intensity: at_zero(PsdKind::Intensity)? })
        })
        .collect()
}

/// Default grid: 400 points on `[0, 10 Ω_max/2π]`, logarithmic below a tenth
/// of the range and linear above.
pub fn default_grid(pulse: &PulseProtocol) -> Vec<f64> {
    grid_up_to(10.0 * pulse.max_rabi() / std::f64::consts::TAU, 400)
}

/// `0`, then log-spaced points from `f_max·1e-4` to `f_max/10`, then linear to `f_max`.
pub fn grid_up_to(f_max: f64, points: usize) -> Vec<f64> {
    if !(f_max > 0.0) || points < 4 {
        return vec![0.0];
    }
    let n_log = (points - 1) / 2;
    let n_lin = points - 1 - n_log;
    let lo = f_max * 1e-4;
    let knee = f_max / 10.0;
    let mut grid = vec![0.0];
    grid.extend((0..n_log).map(|i| lo * (knee / lo).powf(i as f64 / n_log as f64)));
    grid.extend((0..n_lin).map(|i| knee + (f_max - knee) * (i + 1) as f64 / n_lin as f64));
    grid
}
