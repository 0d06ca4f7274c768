//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, SQRT_2};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use multibell_core::families::{
    ghz_state, ghz_tensor_analytic, mix_with_white_noise, scarani_gisin_threshold, singlet, GhzFamily,
};
use multibell_core::lhvcore::{
    construct_lhv_model, enumerate_sign_functions, evaluate_model, general_bell_lhs, polytope_membership,
    CorrelationTable, DeterministicStrategy, ExperimentLayout, SignFunction,
};
use multibell_core::multiset::{
    build_442, build_recursive, check_tightness, tree_doubling, tree_four_by_two, vertex_sweep, BellInequality,
};
use multibell_core::qcond::{
    condition_multisetting_cn, condition_two_qubit, condition_two_setting_n, maximize_bell_value, OptimizerOptions,
};
use multibell_core::qstate::{correlation_tensor, density_from_pure, CorrelationTensor, C64};

const BOUNDARY_TOL: f64 = 1e-9;
const ROUND_TRIP_TOL: f64 = 1e-10;
const SAMPLED_STRATEGIES: usize = 100_000;
const BELL_TOL: f64 = 1e-6;
const GISIN_TOL: f64 = 1e-9;
const THRESHOLD_TOL: f64 = 1e-4;
const CN_TOL: f64 = 1e-9;
const TWO_SETTING_SLACK: f64 = 1e-6;
const ORACLE_TOL: f64 = 1e-10;
const VISIBILITY_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_table(rng: &mut ChaCha8Rng, layout: &ExperimentLayout) -> CorrelationTable {
    let d = layout.dimension();
    let values: Vec<f64> = if rng.random_bool(0.5) {
        (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()
    } else {
        // A random mixture of vertices, stretched or shrunk so that the
        // sample straddles the polytope boundary.
        let count = 1u64 << layout.vertex_count_log2();
        let mut acc = vec![0.0; d];
        let mut total = 0.0;
        for _ in 0..4 {
            let w: f64 = rng.random();
            let s = DeterministicStrategy::from_vertex_index(layout, rng.random_range(0..count));
            for (a, x) in acc.iter_mut().zip(s.vertex(layout)) {
                *a += w * x as f64;
            }
            total += w;
        }
        let stretch = rng.random_range(0.6..1.6);
        acc.iter().map(|a| (a / total * stretch).clamp(-1.0, 1.0)).collect()
    };
    CorrelationTable::new(layout.clone(), values).unwrap()
}

fn criterion_1_and_2() -> (Outcome, Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut disagreements = 0;
    let mut skipped = 0;
    let mut inside = 0;
    let mut total = 0;
    let mut worst_round_trip: f64 = 0.0;
    let mut round_trips = 0;
    for (n, count) in [(2usize, 1000usize), (3, 500)] {
        let layout = ExperimentLayout::two_setting(n).unwrap();
        let bound = (1u64 << n) as f64;
        for _ in 0..count {
            total += 1;
            let t = random_table(&mut rng, &layout);
            let lhs = general_bell_lhs(&t).unwrap();
            if (lhs - bound).abs() <= BOUNDARY_TOL {
                skipped += 1;
                continue;
            }
            let member = polytope_membership(&t).unwrap().is_inside();
            if member != (lhs <= bound) {
                disagreements += 1;
            }
            if lhs <= bound {
                inside += 1;
                let model = construct_lhv_model(&t).unwrap();
                let back = evaluate_model(&model);
                let err = back
                    .values()
                    .iter()
                    .zip(t.values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                worst_round_trip = worst_round_trip.max(err);
                round_trips += 1;
            }
        }
    }
    (
        outcome(
            disagreements == 0,
            format!("{total} tables, {inside} inside, {skipped} on the boundary, {disagreements} disagreements"),
        ),
        outcome(
            worst_round_trip <= ROUND_TRIP_TOL && round_trips > 0,
            format!("{round_trips} models, max deviation {worst_round_trip:.2e} (tol {ROUND_TRIP_TOL:.0e})"),
        ),
    )
}

fn sampled_identity(ineq: &BellInequality, rng: &mut ChaCha8Rng, samples: usize) -> bool {
    let layout = ineq.layout();
    let count = 1u64 << layout.vertex_count_log2();
    (0..samples).all(|_| {
        let s = DeterministicStrategy::from_vertex_index(layout, rng.random_range(0..count));
        ineq.value_at(&s).abs() == ineq.bound()
    })
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let twos: Vec<SignFunction> = enumerate_sign_functions(2).unwrap().collect();
    let mut checked = 0usize;
    let mut failures = 0usize;

    // Two-setting families for N = 2, 3: every member, every strategy.
    for n in [2, 3] {
        for f in enumerate_sign_functions(n).unwrap() {
            let sweep = vertex_sweep(&f.to_inequality()).unwrap();
            checked += 1;
            if !(sweep.min == -sweep.max && sweep.max == f.to_inequality().bound()) {
                failures += 1;
            }
        }
    }
    // All 4096 members of the 4x4x2 family, every strategy.
    for s in &twos {
        for sp in &twos {
            for spp in &twos {
                let ineq = build_442(s, sp, spp).unwrap();
                let sweep = vertex_sweep(&ineq).unwrap();
                checked += 1;
                if sweep.min != -16 || sweep.max != 16 {
                    failures += 1;
                }
            }
        }
    }
    // 4x4x4x2 members with random arity-3 leaves.
    for _ in 0..20 {
        let s = twos[rng.random_range(0..16)].clone();
        let sp = SignFunction::from_index(3, rng.random_range(0..256)).unwrap();
        let spp = SignFunction::from_index(3, rng.random_range(0..256)).unwrap();
        let ineq = build_recursive(&tree_four_by_two(4, &s, &sp, &spp)).unwrap();
        checked += 1;
        if ineq.bound() != 32 || !sampled_identity(&ineq, &mut rng, SAMPLED_STRATEGIES) {
            failures += 1;
        }
    }
    // 8x8x4x2 members: random sign functions, sampled strategies.
    for _ in 0..10 {
        let signs: Vec<SignFunction> = (0..7).map(|_| twos[rng.random_range(0..16)].clone()).collect();
        let ineq = build_recursive(&tree_doubling(4, &signs).unwrap()).unwrap();
        checked += 1;
        if ineq.bound() != 64 || !sampled_identity(&ineq, &mut rng, SAMPLED_STRATEGIES) {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("{checked} inequalities (exhaustive up to 4x4x2, {SAMPLED_STRATEGIES} samples beyond), {failures} failures"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let c = SignFunction::chsh();
    let rep = check_tightness(&build_442(&c, &c, &c).unwrap()).unwrap();
    let elapsed = start.elapsed();
    outcome(
        rep.vertex_count == 256
            && rep.saturating_count == 128
            && rep.affine_rank == 32
            && rep.is_tight
            && elapsed < Duration::from_secs(10),
        format!(
            "{} vertices, {} saturating, rank {}, tight {} in {:.2?}",
            rep.vertex_count, rep.saturating_count, rep.affine_rank, rep.is_tight, elapsed
        ),
    )
}

fn criterion_5() -> Outcome {
    let opts = OptimizerOptions::default();
    let t = correlation_tensor(&density_from_pure(&singlet())).unwrap();
    let chsh = BellInequality::new(ExperimentLayout::two_setting(2).unwrap(), vec![1, 1, 1, -1], 2).unwrap();
    let a = maximize_bell_value(&t, &chsh, &opts).unwrap().value;

    let ghz = correlation_tensor(&density_from_pure(&ghz_state(&GhzFamily::new(3, FRAC_PI_4).unwrap()))).unwrap();
    // E(2,1,1) + E(1,2,1) + E(1,1,2) - E(2,2,2).
    let mermin =
        BellInequality::new(ExperimentLayout::two_setting(3).unwrap(), vec![0, 1, 1, 0, 1, 0, 0, -1], 2).unwrap();
    let b = maximize_bell_value(&ghz, &mermin, &opts).unwrap().value;
    outcome(
        (a - 2.0 * SQRT_2).abs() < BELL_TOL && (b - 4.0).abs() < BELL_TOL,
        format!("CHSH on singlet {a:.9}, Mermin on GHZ {b:.9} (tol {BELL_TOL:.0e})"),
    )
}

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut missed = 0;
    for i in 0..100 {
        let alpha = FRAC_PI_4 * i as f64 / 99.0;
        let f = GhzFamily::new(2, alpha).unwrap();
        let t = correlation_tensor(&density_from_pure(&ghz_state(&f))).unwrap();
        let r = condition_two_qubit(&t).unwrap();
        let want = 1.0 + (2.0 * alpha).sin().powi(2);
        worst = worst.max((r.value - want).abs());
        if alpha > 1e-3 && !r.violated {
            missed += 1;
        }
    }
    outcome(
        worst < GISIN_TOL && missed == 0,
        format!("100-point grid, max |value - (1 + sin^2 2a)| = {worst:.2e}, {missed} non-violations above a = 1e-3"),
    )
}

fn ghz_tensor(n: usize, alpha: f64) -> CorrelationTensor {
    correlation_tensor(&density_from_pure(&ghz_state(&GhzFamily::new(n, alpha).unwrap()))).unwrap()
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let opts = OptimizerOptions::default();
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [3, 5] {
        let violated = |alpha: f64| condition_two_setting_n(&ghz_tensor(n, alpha), &opts).unwrap().violated;
        let (mut lo, mut hi) = (1e-3, FRAC_PI_4);
        if violated(lo) || !violated(hi) {
            pass = false;
            parts.push(format!("N={n}: no sign change on the bracket"));
            continue;
        }
        while hi - lo > 1e-7 {
            let mid = 0.5 * (lo + hi);
            if violated(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let crossing = (2.0 * 0.5 * (lo + hi)).sin();
        let thr = scarani_gisin_threshold(n).unwrap();
        let err = (crossing - thr).abs();
        pass &= err < THRESHOLD_TOL;
        parts.push(format!("N={n}: crossing sin2a = {crossing:.6} vs {thr:.6}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    outcome(pass, format!("{} in {elapsed:.2?}", parts.join(", ")))
}

fn criterion_8() -> Outcome {
    let opts = OptimizerOptions::default();
    let mut worst_margin = f64::INFINITY;
    let mut failures = 0;
    for n in [3, 4, 5] {
        for i in 1..=20 {
            let alpha = FRAC_PI_4 * i as f64 / 20.0;
            let (s, c) = ((2.0 * alpha).sin(), (2.0 * alpha).cos());
            let target = (1u64 << (n - 2)) as f64 * s * s + c * c;
            let r = condition_multisetting_cn(&ghz_tensor(n, alpha), &opts).unwrap();
            worst_margin = worst_margin.min(r.value - target);
            if r.value < target - CN_TOL || !r.violated {
                failures += 1;
            }
        }
    }
    let mut worst_two_setting: f64 = 0.0;
    for i in 1..=20 {
        // sin(2a) ranges over (0, 1/2).
        let alpha = 0.5 * (0.5 * i as f64 / 21.0).asin();
        let v = condition_two_setting_n(&ghz_tensor(3, alpha), &opts).unwrap().value;
        worst_two_setting = worst_two_setting.max(v);
        if v > 1.0 + TWO_SETTING_SLACK {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!(
            "N=3,4,5 x 20 angles: min C_N - (2^(N-2) s^2 + c^2) = {worst_margin:.2e}; N=3 two-setting max below threshold {worst_two_setting:.9}"
        ),
    )
}

/// `<psi| P |psi>` for a Pauli string, applying each factor to basis states.
fn pauli_expectation(psi: &[C64], n: usize, paulis: &[usize]) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for (i, &a) in psi.iter().enumerate() {
        let mut j = i;
        let mut phase = C64::new(1.0, 0.0);
        for (q, &p) in paulis.iter().enumerate() {
            let bit = (i >> (n - 1 - q)) & 1;
            match p {
                0 => {}
                1 => j ^= 1 << (n - 1 - q),
                2 => {
                    j ^= 1 << (n - 1 - q);
                    // Y|0> = i|1>, Y|1> = -i|0>.
                    phase *= if bit == 0 { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) };
                }
                3 => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
                _ => unreachable!(),
            }
        }
        acc += psi[j].conj() * phase * a;
    }
    acc.re
}

fn criterion_9() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_independent: f64 = 0.0;
    let alphas = [0.0, std::f64::consts::PI / 12.0, std::f64::consts::PI / 8.0, FRAC_PI_4];
    for n in 2..=8 {
        for &alpha in &alphas {
            let f = GhzFamily::new(n, alpha).unwrap();
            let analytic = ghz_tensor_analytic(&f);
            let psi = ghz_state(&f);
            let traced = correlation_tensor(&density_from_pure(&psi)).unwrap();
            for (a, b) in analytic.full_components().iter().zip(traced.full_components()) {
                worst = worst.max((a - b).abs());
            }
            if n <= 6 {
                let mut idx = vec![0usize; n];
                for (flat, a) in analytic.full_components().iter().enumerate() {
                    for (q, d) in idx.iter_mut().enumerate() {
                        *d = (flat >> (2 * (n - 1 - q))) & 3;
                    }
                    let e = pauli_expectation(psi.amplitudes(), n, &idx);
                    worst_independent = worst_independent.max((a - e).abs());
                }
            }
        }
    }
    outcome(
        worst < ORACLE_TOL && worst_independent < ORACLE_TOL,
        format!(
            "N=2..8 x 4 angles, max deviation from trace {worst:.2e}; from direct Pauli-string expectation (N<=6) {worst_independent:.2e}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let rho = density_from_pure(&singlet());
    let value = |v: f64| {
        let t = correlation_tensor(&mix_with_white_noise(&rho, v).unwrap()).unwrap();
        condition_two_qubit(&t).unwrap().value
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let ok = value(lo) < 1.0 && value(hi) > 1.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if value(mid) > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let crossing = 0.5 * (lo + hi);
    let err = (crossing - FRAC_1_SQRT_2).abs();
    outcome(
        ok && err < VISIBILITY_TOL,
        format!("crossing at v = {crossing:.12}, |v - 1/sqrt2| = {err:.2e}"),
    )
}

fn main() {
    // `cargo test -- --list` expects no output from a custom harness.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut results: Vec<(usize, &str, Outcome, Duration)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        results.push((id, name, o, t.elapsed()));
    };
    let t = Instant::now();
    let (c1, c2) = criterion_1_and_2();
    let shared = t.elapsed();
    let c1 = Outcome {
        pass: c1.pass && shared < Duration::from_secs(60),
        detail: c1.detail,
    };
    run(3, "identity exactness", &criterion_3);
    run(4, "tightness numbers of the 4x4x2 generating inequality", &criterion_4);
    run(5, "CHSH/Tsirelson and Mermin quantum values", &criterion_5);
    run(6, "two-qubit condition on the Schmidt family", &criterion_6);
    run(7, "two-setting threshold for odd N", &criterion_7);
    run(8, "multisetting condition for GHZ states", &criterion_8);
    run(9, "analytic GHZ tensor against trace oracle", &criterion_9);
    run(10, "white-noise visibility threshold", &criterion_10);
    results.insert(0, (2, "LHV model reconstruction", c2, shared));
    results.insert(0, (1, "completeness of the two-setting inequality", c1, shared));

    let mut failed = 0;
    for (id, name, o, elapsed) in &results {
        let mark = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("criterion {id:>2} [{mark}] {name}: {} ({elapsed:.2?})", o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
