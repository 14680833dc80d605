use hm_core::circuit::CircuitLevel;
use hm_core::rng::rng_from_seed;
use hm_core::sketch::PairSketch;
use hm_core::statevector::PvmOutcome;
use hm_core::{Control, GateOp, QuantumState};
use num_complex::Complex64;
use proptest::prelude::*;

fn normalized(raw: &[(f64, f64)]) -> Vec<Complex64> {
    let v: Vec<Complex64> = raw.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn state_strategy(k: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << k)
        .prop_filter("non-zero", |v| v.iter().any(|&(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| normalized(&v))
}

fn transpositions(k: usize) -> impl Strategy<Value = Vec<(u64, u64)>> {
    let top = 1u64 << k;
    prop::collection::vec((0..top, 0..top).prop_filter("distinct", |(a, b)| a != b), 1..6)
}

fn case() -> impl Strategy<Value = (usize, Vec<Complex64>, Vec<(u64, u64)>, bool)> {
    (1usize..=4).prop_flat_map(|k| (Just(k), state_strategy(k), transpositions(k), any::<bool>()))
}

fn gate(m: usize) -> impl Strategy<Value = GateOp> {
    let q = 0..m;
    prop_oneof![
        q.clone().prop_map(GateOp::H),
        q.clone().prop_map(GateOp::X),
        q.clone().prop_map(GateOp::T),
        q.clone().prop_map(GateOp::Tdg),
        (q.clone(), q.clone()).prop_filter("distinct", |(a, b)| a != b).prop_map(|(control, target)| GateOp::Cx { control, target }),
        (q.clone(), q.clone(), q.clone())
            .prop_filter("distinct", |(a, b, c)| a != b && b != c && a != c)
            .prop_map(|(c0, c1, target)| GateOp::Rccx { c0, c1, target }),
        (-3.0f64..3.0, q.clone()).prop_map(|(theta, target)| GateOp::Ry { theta, target, controls: vec![] }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn update_is_the_permutation((k, amps, swaps, physical) in case()) {
        let level = if physical { CircuitLevel::Physical } else { CircuitLevel::Logical };
        let mut s = PairSketch::new(k, level, 0.0, rng_from_seed(1)).unwrap();
        s.load_sketch_amplitudes(&amps).unwrap();
        s.update(&swaps).unwrap();
        let mut expected = amps.clone();
        for &(a, b) in &swaps {
            expected.swap(a as usize, b as usize);
        }
        let got = s.sketch_amplitudes();
        let kept: f64 = got.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((kept - 1.0).abs() < 1e-9, "weight leaked off the sketch register: {kept}");
        for (x, y) in got.iter().zip(&expected) {
            prop_assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn unitaries_keep_the_norm(amps in state_strategy(4), ops in prop::collection::vec(gate(4), 0..40)) {
        let mut s = QuantumState::from_amplitudes(amps).unwrap();
        s.apply_all(&ops).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mcx_twice_is_identity(
        amps in state_strategy(5),
        mask in 1u8..32,
        polarity in any::<u8>(),
        target in 0usize..5,
    ) {
        let controls: Vec<Control> = (0..5)
            .filter(|&q| q != target && mask >> q & 1 == 1)
            .map(|q| Control { qubit: q, on: polarity >> q & 1 == 1 })
            .collect();
        prop_assume!(!controls.is_empty());
        let op = GateOp::mcx(controls, target);
        let before = QuantumState::from_amplitudes(amps).unwrap();
        let mut s = before.clone();
        s.apply(&op).unwrap();
        s.apply(&op).unwrap();
        prop_assert!(s.distance_up_to_phase(&before) < 1e-12);
    }

    #[test]
    fn pair_query_probabilities_match_projectors(amps in state_strategy(3), a in 0u64..8, b in 0u64..8) {
        prop_assume!(a != b);
        let mut s = PairSketch::new(3, CircuitLevel::Logical, 0.0, rng_from_seed(2)).unwrap();
        s.load_sketch_amplitudes(&amps).unwrap();
        let (plus, minus, _) = s.state().pvm_probabilities(a as usize, b as usize).unwrap();
        let q = s.query_pair(a, b).unwrap();
        prop_assert!((q.p_plus - plus).abs() < 1e-10);
        prop_assert!((q.p_minus - minus).abs() < 1e-10);
    }
}

#[test]
fn pair_query_collapses_like_the_projector() {
    let amps = normalized(&[(0.3, 0.1), (0.5, -0.2), (0.1, 0.0), (-0.4, 0.3), (0.2, 0.2), (0.0, 0.6), (0.1, -0.1), (0.3, 0.0)]);
    for seed in 0..200 {
        let mut s = PairSketch::new(3, CircuitLevel::Logical, 0.0, rng_from_seed(seed)).unwrap();
        s.load_sketch_amplitudes(&amps).unwrap();
        let (a, b) = (1, 6);
        let q = s.query_pair(a, b).unwrap();
        s.settle().unwrap();
        let mut expected = QuantumState::from_amplitudes(amps.clone()).unwrap();
        expected.project_pvm(a as usize, b as usize, q.outcome);
        let got = QuantumState::from_amplitudes(s.sketch_amplitudes().to_vec()).unwrap();
        assert!(got.distance_up_to_phase(&expected) < 1e-9, "seed {seed}, {:?}", q.outcome);
        if q.outcome == PvmOutcome::Plus {
            let ratio = got.amplitude(a as usize) / got.amplitude(b as usize);
            assert!((ratio - 1.0).norm() < 1e-9);
        }
    }
}
