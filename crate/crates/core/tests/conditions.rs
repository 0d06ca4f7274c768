use nalgebra::{Matrix3, Rotation3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use multibell_core::families::{ghz_state, GhzFamily};
use multibell_core::lhvcore::ExperimentLayout;
use multibell_core::qcond::{
    condition_multisetting_cn, condition_two_qubit, condition_two_setting_n, maximize_bell_value, ConditionKind,
    OptimizerOptions,
};
use multibell_core::qstate::{correlation_tensor, density_from_pure, CorrelationTensor, PureState, C64};
use multibell_core::BellInequality;

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> CorrelationTensor {
    let amps = (0..1 << n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    correlation_tensor(&density_from_pure(&PureState::normalized(n, amps).unwrap())).unwrap()
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let (a, b, c) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    *Rotation3::from_euler_angles(a, b, c).matrix()
}

fn quick() -> OptimizerOptions {
    OptimizerOptions {
        restarts: 20,
        ..Default::default()
    }
}

#[test]
fn conditions_are_local_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [2, 3] {
        for _ in 0..5 {
            let t = random_state(&mut rng, n);
            let rots: Vec<_> = (0..n).map(|_| random_rotation(&mut rng)).collect();
            let r = t.rotate_locally(&rots).unwrap();
            if n == 2 {
                let (a, b) = (condition_two_qubit(&t).unwrap().value, condition_two_qubit(&r).unwrap().value);
                assert!((a - b).abs() < 1e-10);
            }
            let a = condition_two_setting_n(&t, &quick()).unwrap().value;
            let b = condition_two_setting_n(&r, &quick()).unwrap().value;
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn two_qubit_value_predicts_chsh_maximum() {
    // The maximal CHSH value of a two-qubit state is 2 sqrt(M).
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let chsh = BellInequality::new(ExperimentLayout::two_setting(2).unwrap(), vec![1, 1, 1, -1], 2).unwrap();
    for _ in 0..10 {
        let t = random_state(&mut rng, 2);
        let m = condition_two_qubit(&t).unwrap();
        let s = maximize_bell_value(&t, &chsh, &quick()).unwrap().value;
        assert!((s - 2.0 * m.value.sqrt()).abs() < 1e-6, "{s} vs {}", m.value);
        assert_eq!(m.violated, s > 2.0 + 1e-9);
    }
}

#[test]
fn general_conditions_agree_for_two_qubits() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let t = random_state(&mut rng, 2);
        let exact = condition_two_qubit(&t).unwrap().value;
        let two = condition_two_setting_n(&t, &quick()).unwrap().value;
        let cn = condition_multisetting_cn(&t, &quick()).unwrap().value;
        assert!((exact - two).abs() < 1e-8, "{exact} vs {two}");
        assert!((exact - cn).abs() < 1e-8, "{exact} vs {cn}");
    }
}

#[test]
fn multisetting_dominates_two_setting() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for n in [3, 4] {
        for _ in 0..4 {
            let t = random_state(&mut rng, n);
            let two = condition_two_setting_n(&t, &quick()).unwrap();
            let cn = condition_multisetting_cn(&t, &quick()).unwrap();
            assert!(cn.value >= two.value - 1e-9, "N={n}: {} < {}", cn.value, two.value);
            assert_eq!(cn.kind, ConditionKind::MultisettingCn);
        }
    }
}

#[test]
fn frames_are_orthonormal_and_reproducible() {
    let t = correlation_tensor(&density_from_pure(&ghz_state(&GhzFamily::new(4, 0.5).unwrap()))).unwrap();
    let opts = OptimizerOptions { seed: 7, ..quick() };
    let a = condition_multisetting_cn(&t, &opts).unwrap();
    let b = condition_multisetting_cn(&t, &opts).unwrap();
    assert_eq!(a.value, b.value);
    assert_eq!(a.frames.len(), 4);
    for f in &a.frames {
        let [u, v] = f.axes();
        assert!((u.dot(&u) - 1.0).abs() < 1e-12);
        assert!(u.dot(&v).abs() < 1e-12);
    }
    let json = a.to_json();
    assert_eq!(json["kind"], "multisetting_CN");
    assert_eq!(json["seed"], 7);
}

#[test]
fn product_states_are_not_flagged() {
    let t = correlation_tensor(&density_from_pure(&PureState::basis(3, 5).unwrap())).unwrap();
    let two = condition_two_setting_n(&t, &quick()).unwrap();
    let cn = condition_multisetting_cn(&t, &quick()).unwrap();
    assert!((two.value - 1.0).abs() < 1e-9 && !two.violated);
    assert!((cn.value - 1.0).abs() < 1e-9 && !cn.violated);
}
