use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rydex_core::frt::*;
use rydex_core::grape::{optimize, Ansatz, GateProblem, OptimizationSettings};
use rydex_core::hilbert::DriveChannel;
use rydex_core::noise::*;
use rydex_core::*;
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

fn random_pulse(rng: &mut impl Rng, scheme: Scheme, modulation: Modulation, segments: usize) -> PulseProtocol {
    let params: Vec<f64> = (0..scheme.channels().len() * segments)
        .map(|_| match modulation {
            Modulation::Rabi => rng.random_range(0.0..2.0),
            Modulation::Phase => rng.random_range(-PI..PI),
        })
        .collect();
    PulseProtocol::from_parameters(scheme, modulation, rng.random_range(2.0..8.0), 1.0, rng.random_range(0.5..3.0), segments, &params)
        .unwrap()
}

fn system(pulse: &PulseProtocol) -> SystemConfig {
    SystemConfig::new(pulse.scheme(), pulse.v_over_omega() * pulse.omega0()).unwrap()
}

fn converged_pulse() -> &'static PulseProtocol {
    static PULSE: OnceLock<PulseProtocol> = OnceLock::new();
    PULSE.get_or_init(|| {
        let target = embed_target(PI).unwrap();
        let problem = GateProblem::normalized(Scheme::A, Modulation::Rabi, TAU * 2.5, 1.5, 30, target).unwrap();
        let settings = OptimizationSettings { max_iterations: 2000, restarts: 6, target_infidelity: Some(1e-8), ..Default::default() };
        let rec = optimize(&problem, &settings, &Ansatz::Random).unwrap();
        assert!(rec.infidelity < 1e-6, "{}", rec.infidelity);
        rec.pulse
    })
}

#[test]
fn factorized_and_double_sum_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    // Qubit amplitudes on pair indices 0, 1, 4, 5.
    let embed = |q: [[f64; 2]; 4]| {
        let mut v = vec![[0.0, 0.0]; 16];
        for (amp, idx) in q.into_iter().zip([0, 1, 4, 5]) {
            v[idx] = amp;
        }
        v
    };
    let states = StateAverage::StateList(vec![
        embed([[0.5, 0.0], [0.0, 0.5], [0.5, 0.0], [0.0, -0.5]]),
        embed([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]),
    ]);
    for (scheme, modulation) in [(Scheme::A, Modulation::Rabi), (Scheme::B, Modulation::Phase), (Scheme::A, Modulation::Phase)] {
        let pulse = random_pulse(&mut rng, scheme, modulation, 5);
        let cfg = system(&pulse);
        let freqs = [0.0, 0.03, 0.11, 0.4, 1.3];
        for op in all_operators(&pulse, &[PsdKind::Phase, PsdKind::Intensity]) {
            for avg in [StateAverage::BasisAverage, StateAverage::GateAverage, states.clone()] {
                let fast = response_function(&cfg, &pulse, op, &freqs, &avg, 3).unwrap();
                let slow = response_function_direct(&cfg, &pulse, op, &freqs, &avg, 3).unwrap();
                for (a, b) in fast.iter().zip(&slow) {
                    assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "{op:?} {avg:?}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn zero_psd_gives_zero_infidelity() {
    let pulse = converged_pulse();
    let cfg = system(pulse);
    let grid = default_grid(pulse);
    let spectrum = response_spectrum(&cfg, pulse, &all_operators(pulse, &[PsdKind::Phase]), &grid, &StateAverage::GateAverage, 2).unwrap();
    let psd = PsdTable::white(PsdKind::Phase, 0.0, *grid.last().unwrap()).unwrap();
    assert_eq!(frt_infidelity(&spectrum, &psd), 0.0);
    // A PSD of the other kind does not contribute either.
    let rin = PsdTable::white(PsdKind::Intensity, 1.0, *grid.last().unwrap()).unwrap();
    assert_eq!(frt_infidelity(&spectrum, &rin), 0.0);
}

#[test]
fn static_intensity_response_is_the_curvature_of_the_infidelity() {
    let pulse = converged_pulse();
    let cfg = system(pulse);
    let target = embed_target(PI).unwrap();
    let substeps = 2;
    let total = pulse.segments() * substeps;
    let audit = zero_frequency_audit(&cfg, pulse, &StateAverage::GateAverage, substeps).unwrap();
    for entry in &audit {
        let infid = |alpha: f64| {
            let mut draw = NoiseDraw::none();
            draw.intensity = BTreeMap::from([(entry.channel, vec![alpha; total])]);
            1.0 - gate_fidelity(&noisy_propagate(&cfg, pulse, &draw, substeps).unwrap(), &target)
        };
        let eps = 1e-3;
        let curvature = (infid(eps) - 2.0 * infid(0.0) + infid(-eps)) / (eps * eps);
        assert!((entry.intensity / curvature - 1.0).abs() < 0.02, "{}: {} vs {curvature}", entry.channel, entry.intensity);
        // A constant phase offset on one channel is absorbed by the target.
        let phase_shift = |delta: f64| {
            let mut draw = NoiseDraw::none();
            draw.phase = BTreeMap::from([(entry.channel, vec![delta; total])]);
            1.0 - gate_fidelity(&noisy_propagate(&cfg, pulse, &draw, substeps).unwrap(), &target)
        };
        let phase_curv = (phase_shift(eps) - 2.0 * phase_shift(0.0) + phase_shift(-eps)) / (eps * eps);
        assert!((entry.phase - phase_curv).abs() < 0.02 * entry.intensity.max(1e-3), "{} vs {phase_curv}", entry.phase);
    }
}

#[test]
fn weak_white_noise_matches_monte_carlo() {
    let pulse = converged_pulse().rescaled(TAU * 10e6).unwrap();
    let cfg = system(&pulse);
    let target = embed_target(PI).unwrap();
    let f_max = 100e6;
    let grid = grid_up_to(f_max, 300);
    for (kind, source) in [(PsdKind::Phase, NoiseSource::LaserPhase), (PsdKind::Intensity, NoiseSource::LaserIntensity)] {
        let psd = PsdTable::white(kind, 1e-11, f_max).unwrap();
        let spectrum = response_spectrum(&cfg, &pulse, &all_operators(&pulse, &[kind]), &grid, &StateAverage::GateAverage, 8).unwrap();
        let frt = frt_infidelity(&spectrum, &psd);
        let noise = NoiseConfig { phase_psd: Some(psd.clone()), intensity_psd: Some(psd), ..Default::default() };
        let budget = noise_budget(&cfg, &pulse, &target, &noise, &BudgetRequest { sources: vec![source], shots: 300, seed: 4, substeps: 8 }).unwrap();
        let mc = budget.get(source).unwrap();
        let tol = (0.2 * mc.mean).max(3.0 * mc.std_error);
        assert!((frt - mc.mean).abs() < tol, "{kind:?}: FRT {frt:e} vs MC {:e} ± {:e}", mc.mean, mc.std_error);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rescaling_dilates_the_frequency_axis(seed in any::<u64>(), c in 0.2f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pulse = random_pulse(&mut rng, Scheme::A, Modulation::Rabi, 4);
        let scaled = pulse.rescaled(pulse.max_rabi() * c).unwrap();
        let freqs = [0.0, 0.05, 0.2, 0.7];
        let scaled_freqs: Vec<f64> = freqs.iter().map(|f| f * c).collect();
        for kind in [PsdKind::Phase, PsdKind::Intensity] {
            let op = NoiseOperatorKind { kind, channel: DriveChannel::Ch1R };
            let a = response_function(&system(&pulse), &pulse, op, &freqs, &StateAverage::GateAverage, 2).unwrap();
            let b = response_function(&system(&scaled), &scaled, op, &scaled_freqs, &StateAverage::GateAverage, 2).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9 * x.abs().max(1e-6), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn response_functions_are_non_negative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pulse = random_pulse(&mut rng, Scheme::B, Modulation::Phase, 4);
        let freqs = [0.0, 0.1, 0.3, 1.0, 3.0];
        for op in all_operators(&pulse, &[PsdKind::Phase, PsdKind::Intensity]) {
            for avg in [StateAverage::BasisAverage, StateAverage::GateAverage] {
                let v = response_function(&system(&pulse), &pulse, op, &freqs, &avg, 2).unwrap();
                prop_assert!(v.iter().all(|x| *x >= -1e-12), "{v:?}");
            }
        }
    }
}
