use nalgebra::DMatrix;
use proptest::prelude::*;

use multibell_core::qstate::{correlation_tensor, density_from_pure, quantum_correlation, PureState, SettingVector, C64};

fn pauli(p: usize) -> DMatrix<C64> {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    let e = match p {
        0 => [o, z, z, o],
        1 => [z, o, o, z],
        2 => [z, -i, i, z],
        _ => [o, z, z, -o],
    };
    DMatrix::from_row_slice(2, 2, &e)
}

fn kron_all(ms: &[DMatrix<C64>]) -> DMatrix<C64> {
    ms.iter()
        .skip(1)
        .fold(ms[0].clone(), |acc, m| acc.kronecker(m))
}

fn expectation(psi: &[C64], op: &DMatrix<C64>) -> C64 {
    let v = DMatrix::from_column_slice(psi.len(), 1, psi);
    (v.adjoint() * op * &v)[(0, 0)]
}

fn state_strategy() -> impl Strategy<Value = PureState> {
    (1usize..=4).prop_flat_map(|n| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map("zero vector", move |a| {
            let amps: Vec<C64> = a.into_iter().map(|(re, im)| C64::new(re, im)).collect();
            PureState::normalized(n, amps).ok()
        })
    })
}

fn unit_strategy() -> impl Strategy<Value = SettingVector> {
    prop::array::uniform3(-1.0f64..1.0).prop_filter_map("zero vector", |v| SettingVector::normalized(v).ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_matches_kronecker_expectations(psi in state_strategy()) {
        let n = psi.n_qubits();
        let t = correlation_tensor(&density_from_pure(&psi)).unwrap();
        for (flat, &c) in t.full_components().iter().enumerate() {
            let idx: Vec<usize> = (0..n).map(|q| (flat >> (2 * (n - 1 - q))) & 3).collect();
            let op = kron_all(&idx.iter().map(|&p| pauli(p)).collect::<Vec<_>>());
            let e = expectation(psi.amplitudes(), &op);
            prop_assert!(e.im.abs() < 1e-12);
            prop_assert!((e.re - c).abs() < 1e-12, "index {:?}: {} vs {}", idx, e.re, c);
        }
        prop_assert!((t.full_components()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_matches_direct_operator(
        psi in state_strategy(),
        settings in prop::collection::vec(unit_strategy(), 4),
    ) {
        let n = psi.n_qubits();
        let t = correlation_tensor(&density_from_pure(&psi)).unwrap();
        let ops: Vec<DMatrix<C64>> = settings[..n]
            .iter()
            .map(|a| {
                let [x, y, z] = a.components();
                pauli(1) * C64::new(x, 0.0) + pauli(2) * C64::new(y, 0.0) + pauli(3) * C64::new(z, 0.0)
            })
            .collect();
        let e = expectation(psi.amplitudes(), &kron_all(&ops)).re;
        let got = quantum_correlation(&t, &settings[..n]).unwrap();
        prop_assert!((e - got).abs() < 1e-12);
        prop_assert!(got.abs() <= 1.0 + 1e-12);
    }
}

#[test]
fn basis_state_tensor() {
    // |01>: z components are +1 on party 1 and -1 on party 2.
    let t = correlation_tensor(&density_from_pure(&PureState::basis(2, 1).unwrap())).unwrap();
    assert!((t.component(&[3, 0]) - 1.0).abs() < 1e-15);
    assert!((t.component(&[0, 3]) + 1.0).abs() < 1e-15);
    assert!((t.component(&[3, 3]) + 1.0).abs() < 1e-15);
    assert!(t.component(&[1, 1]).abs() < 1e-15);
}
