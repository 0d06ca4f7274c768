use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use multibell_core::families::{ghz_state, ghz_tensor_analytic, GhzFamily};
use multibell_core::lhvcore::{general_bell_lhs, polytope_membership, CorrelationTable, ExperimentLayout};
use multibell_core::multiset::{build_442, check_tightness, vertex_sweep};
use multibell_core::qcond::{condition_multisetting_cn, condition_two_setting_n, OptimizerOptions};
use multibell_core::qstate::{correlation_tensor, density_from_pure};
use multibell_core::SignFunction;

fn states(c: &mut Criterion) {
    let psi = ghz_state(&GhzFamily::new(6, 0.4).unwrap());
    let rho = density_from_pure(&psi);
    c.bench_function("correlation_tensor/ghz6", |b| b.iter(|| correlation_tensor(black_box(&rho)).unwrap()));
}

fn lhv(c: &mut Criterion) {
    let h = std::f64::consts::FRAC_1_SQRT_2 * 0.9;
    let table = CorrelationTable::new(
        ExperimentLayout::two_setting(3).unwrap(),
        vec![h, -h, 0.2, 0.1, -0.3, h, 0.0, -h],
    )
    .unwrap();
    c.bench_function("general_bell_lhs/2x2x2", |b| b.iter(|| general_bell_lhs(black_box(&table)).unwrap()));
    c.bench_function("polytope_membership/2x2x2", |b| b.iter(|| polytope_membership(black_box(&table)).unwrap()));
}

fn multiset(c: &mut Criterion) {
    let s = SignFunction::chsh();
    let ineq = build_442(&s, &s, &s).unwrap();
    c.bench_function("check_tightness/4x4x2", |b| b.iter(|| check_tightness(black_box(&ineq)).unwrap()));
    c.bench_function("vertex_sweep/4x4x2", |b| b.iter(|| vertex_sweep(black_box(&ineq)).unwrap()));
}

fn conditions(c: &mut Criterion) {
    let t = ghz_tensor_analytic(&GhzFamily::new(5, 0.3).unwrap());
    let opts = OptimizerOptions {
        restarts: 10,
        ..Default::default()
    };
    let mut g = c.benchmark_group("conditions/ghz5");
    g.sample_size(10);
    g.bench_function("two_setting", |b| b.iter(|| condition_two_setting_n(black_box(&t), &opts).unwrap()));
    g.bench_function("multisetting_cn", |b| b.iter(|| condition_multisetting_cn(black_box(&t), &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, states, lhv, multiset, conditions);
criterion_main!(benches);
