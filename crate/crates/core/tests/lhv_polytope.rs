use proptest::prelude::*;

use multibell_core::lhvcore::{
    construct_lhv_model, evaluate_model, general_bell_lhs, polytope_membership, CorrelationTable,
    DeterministicStrategy, ExperimentLayout, Membership,
};

/// Convex mixture of deterministic vertices; inside the polytope by construction.
fn mixture(n: usize, picks: &[(u64, f64)]) -> CorrelationTable {
    let layout = ExperimentLayout::two_setting(n).unwrap();
    let count = 1u64 << layout.vertex_count_log2();
    let total: f64 = picks.iter().map(|p| p.1).sum();
    let mut values = vec![0.0; layout.dimension()];
    for &(idx, w) in picks {
        let v = DeterministicStrategy::from_vertex_index(&layout, idx % count).vertex(&layout);
        for (a, x) in values.iter_mut().zip(v) {
            *a += w / total * x as f64;
        }
    }
    CorrelationTable::new(layout, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mixtures_are_local(n in 2usize..=3, picks in prop::collection::vec((any::<u64>(), 0.01f64..1.0), 1..6)) {
        let t = mixture(n, &picks);
        let bound = (1u64 << n) as f64;
        prop_assert!(general_bell_lhs(&t).unwrap() <= bound + 1e-9);
        prop_assert!(polytope_membership(&t).unwrap().is_inside());
        let back = evaluate_model(&construct_lhv_model(&t).unwrap());
        for (a, b) in back.values().iter().zip(t.values()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn certificates_separate(n in 2usize..=3, values in prop::collection::vec(-1.0f64..=1.0, 8)) {
        let layout = ExperimentLayout::two_setting(n).unwrap();
        let t = CorrelationTable::new(layout.clone(), values[..layout.dimension()].to_vec()).unwrap();
        if let Membership::Outside { certificate, .. } = polytope_membership(&t).unwrap() {
            prop_assert!(certificate.value(&t) > certificate.bound());
            for idx in 0..1u64 << layout.vertex_count_log2() {
                let v = DeterministicStrategy::from_vertex_index(&layout, idx).table(&layout);
                prop_assert!(certificate.value(&v).abs() <= certificate.bound() + 1e-9);
            }
        }
    }
}

#[test]
fn every_vertex_saturates() {
    for n in 2..=4 {
        let layout = ExperimentLayout::two_setting(n).unwrap();
        for idx in 0..1u64 << layout.vertex_count_log2() {
            let t = DeterministicStrategy::from_vertex_index(&layout, idx).table(&layout);
            assert_eq!(general_bell_lhs(&t).unwrap(), (1u64 << n) as f64);
        }
    }
}

#[test]
fn pr_box_is_outside() {
    let layout = ExperimentLayout::two_setting(2).unwrap();
    let t = CorrelationTable::new(layout, vec![1.0, 1.0, 1.0, -1.0]).unwrap();
    assert_eq!(general_bell_lhs(&t).unwrap(), 8.0);
    assert!(!polytope_membership(&t).unwrap().is_inside());
    assert!(construct_lhv_model(&t).is_err());
}
