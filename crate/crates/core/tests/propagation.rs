use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rydex_core::grape::{gradient, total_cost};
use rydex_core::hilbert::{Operator, C64};
use rydex_core::*;
use std::f64::consts::PI;

fn random_pulse(rng: &mut impl Rng, scheme: Scheme, modulation: Modulation, segments: usize) -> PulseProtocol {
    let params: Vec<f64> = (0..scheme.channels().len() * segments)
        .map(|_| match modulation {
            Modulation::Rabi => rng.random_range(0.0..2.0),
            Modulation::Phase => rng.random_range(-PI..PI),
        })
        .collect();
    let duration = rng.random_range(1.0..8.0);
    let v = rng.random_range(0.3..4.0);
    PulseProtocol::from_parameters(scheme, modulation, duration, 1.0, v, segments, &params).unwrap()
}

/// Classical RK4 on `dU/dt = −iHU`, one constant H per segment.
fn rk4_propagator(config: &SystemConfig, pulse: &PulseProtocol, steps_per_segment: usize) -> Operator {
    let mut u = Operator::identity();
    let h = pulse.segment_duration() / steps_per_segment as f64;
    let mi = C64::new(0.0, -1.0);
    for k in 0..pulse.segments() {
        let gen = build_hamiltonian(config, &pulse.snapshot(k)).unwrap() * mi;
        for _ in 0..steps_per_segment {
            let k1 = gen * u;
            let k2 = gen * (u + k1 * C64::from(0.5 * h));
            let k3 = gen * (u + k2 * C64::from(0.5 * h));
            let k4 = gen * (u + k3 * C64::from(h));
            u += (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(h / 6.0);
        }
    }
    u
}

#[test]
fn exponential_product_matches_ode_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for scheme in [Scheme::A, Scheme::B] {
        for modulation in [Modulation::Rabi, Modulation::Phase] {
            for decay in [false, true] {
                let pulse = random_pulse(&mut rng, scheme, modulation, 4);
                let mut config = SystemConfig::new(scheme, pulse.v_over_omega()).unwrap();
                if decay {
                    config = config.with_decay(0.05, 0.02).unwrap();
                }
                let exact = propagate(&config, &pulse, 1).unwrap().final_operator;
                let ode = rk4_propagator(&config, &pulse, 4000);
                let err = (exact - ode).iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(err < 1e-8, "{scheme} {modulation} decay={decay}: {err:e}");
            }
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let target = embed_target(PI).unwrap();
    let lambda = 1e-3;
    for scheme in [Scheme::A, Scheme::B] {
        for modulation in [Modulation::Rabi, Modulation::Phase] {
            for _ in 0..3 {
                let pulse = random_pulse(&mut rng, scheme, modulation, 8);
                let config = SystemConfig::new(scheme, pulse.v_over_omega()).unwrap();
                let g = gradient(&config, &pulse, &target, lambda).unwrap();
                let p0 = pulse.parameters();
                let scale = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                for i in 0..p0.len() {
                    let h = 1e-6;
                    let cost = |d: f64| {
                        let mut p = p0.clone();
                        p[i] += d;
                        total_cost(&config, &pulse.with_parameters(&p).unwrap(), &target, lambda).unwrap()
                    };
                    let fd = (cost(h) - cost(-h)) / (2.0 * h);
                    assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1e-3 * scale), "{scheme} {modulation} {i}: {fd} vs {}", g[i]);
                }
            }
        }
    }
}

#[test]
fn time_diagnostics_of_a_dark_pulse_vanish() {
    let pulse = PulseProtocol::from_parameters(Scheme::B, Modulation::Rabi, 3.0, 1.0, 1.0, 3, &[0.0; 9]).unwrap();
    let res = propagate(&SystemConfig::new(Scheme::B, 1.0).unwrap(), &pulse, 4).unwrap();
    assert_eq!(res.t_int, 0.0);
    assert_eq!(res.t_ryd, 0.0);
    let q = project_to_qubit(&res.final_operator);
    assert!((q - hilbert::QubitOperator::identity()).iter().all(|z| z.norm() < 1e-15));
}

fn scheme_strategy() -> impl Strategy<Value = (Scheme, Modulation, u64)> {
    (prop_oneof![Just(Scheme::A), Just(Scheme::B)], prop_oneof![Just(Modulation::Rabi), Just(Modulation::Phase)], any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn propagator_is_unitary_and_fidelity_bounded((scheme, modulation, seed) in scheme_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pulse = random_pulse(&mut rng, scheme, modulation, 6);
        let config = SystemConfig::new(scheme, pulse.v_over_omega()).unwrap();
        let res = propagate(&config, &pulse, 2).unwrap();
        let dev = (res.final_operator.adjoint() * res.final_operator - Operator::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(dev < 1e-12);
        let f = gate_fidelity(&res, &embed_target(rng.random_range(0.05..PI)).unwrap());
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        prop_assert!(res.t_int >= 0.0 && res.t_ryd >= res.t_int);
    }

    #[test]
    fn decay_never_increases_norm((scheme, modulation, seed) in scheme_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pulse = random_pulse(&mut rng, scheme, modulation, 5);
        let config = SystemConfig::new(scheme, pulse.v_over_omega()).unwrap().with_decay(0.1, 0.3).unwrap();
        let u = propagate(&config, &pulse, 1).unwrap().final_operator;
        for col in u.column_iter() {
            prop_assert!(col.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn rescaling_preserves_noise_free_fidelity((scheme, modulation, seed) in scheme_strategy(), factor in 0.1f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pulse = random_pulse(&mut rng, scheme, modulation, 5);
        let target = embed_target(PI).unwrap();
        let f = |p: &PulseProtocol| {
            let config = SystemConfig::new(scheme, p.v_over_omega() * p.omega0()).unwrap();
            gate_fidelity(&propagate(&config, p, 1).unwrap(), &target)
        };
        let scaled = pulse.rescaled(pulse.max_rabi() * factor).unwrap();
        prop_assert!((f(&pulse) - f(&scaled)).abs() < 1e-12);
        prop_assert!((scaled.duration() * factor - pulse.duration()).abs() < 1e-12 * pulse.duration());
    }

    #[test]
    fn splitting_composes((scheme, modulation, seed) in scheme_strategy(), k in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pulse = random_pulse(&mut rng, scheme, modulation, 8);
        let config = SystemConfig::new(scheme, pulse.v_over_omega()).unwrap();
        let (a, b) = pulse.split_at(k).unwrap();
        let whole = propagate(&config, &pulse, 1).unwrap().final_operator;
        let parts = propagate(&config, &b, 1).unwrap().final_operator * propagate(&config, &a, 1).unwrap().final_operator;
        prop_assert!((whole - parts).iter().all(|z| z.norm() < 1e-12));
    }
}
