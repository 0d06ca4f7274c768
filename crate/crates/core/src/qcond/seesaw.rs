//! See-saw ascent for the quantum value of a Bell expression.

use nalgebra::Vector3;

use super::{random_unit, require_parties, OptimizerOptions};
use crate::error::{Error, Result};
use crate::multiset::BellInequality;
use crate::qstate::{CorrelationTensor, SettingVector};
use crate::tensor;

/// Best value of `sum_k c(k) E(k)` found over setting vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BellValue {
    pub value: f64,
    /// `settings[j][k]` is party `j`'s vector for setting `k`.
    pub settings: Vec<Vec<SettingVector>>,
    pub converged: bool,
    /// Updates skipped because the contraction vanished (previous vector kept).
    pub degenerate_updates: usize,
}

type Settings = Vec<Vec<Vector3<f64>>>;

fn setting_map(vs: &[Vector3<f64>]) -> Vec<f64> {
    vs.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
}

/// Contracts every party except `skip` with its setting vectors.
fn contract(m: &[f64], settings: &[Vec<Vector3<f64>>], skip: usize) -> (Vec<f64>, Vec<usize>) {
    let mut cur = m.to_vec();
    let mut dims = vec![3; settings.len()];
    for (j, vs) in settings.iter().enumerate() {
        if j != skip {
            cur = tensor::apply_map(&cur, &dims, j, &setting_map(vs), vs.len());
            dims[j] = vs.len();
        }
    }
    (cur, dims)
}

fn expression_value(m: &[f64], settings: &[Vec<Vector3<f64>>], coeffs: &[i64]) -> f64 {
    let (e, _) = contract(m, settings, usize::MAX);
    e.iter().zip(coeffs).map(|(x, &c)| x * c as f64).sum()
}

/// `g[k]` such that the expression equals `sum_k a_{j,k} . g[k]` plus terms
/// independent of party `j`.
fn party_gradients(m: &[f64], settings: &[Vec<Vector3<f64>>], coeffs: &[i64], j: usize) -> Vec<Vector3<f64>> {
    let (d, dims) = contract(m, settings, j);
    let mj = settings[j].len();
    let inner: usize = dims[j + 1..].iter().product();
    let mut g = vec![Vector3::zeros(); mj];
    for (flat, &x) in d.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let r = (flat / inner) % 3;
        // Flat coefficient index with party j at setting 0.
        let outer = flat / (3 * inner);
        let base = outer * mj * inner + flat % inner;
        for (k, gk) in g.iter_mut().enumerate() {
            gk[r] += x * coeffs[base + k * inner] as f64;
        }
    }
    g
}

/// Quantum value `sum_k c(k) (a_{1,k_1} x ... x a_{N,k_N}) . T`, maximized by
/// see-saw: with all other vectors fixed the expression is linear in each
/// party's vectors, so each update sets `a_{j,k} = g_k / |g_k|`.
pub fn maximize_bell_value(t: &CorrelationTensor, ineq: &BellInequality, opts: &OptimizerOptions) -> Result<BellValue> {
    let layout = ineq.layout();
    require_parties(t, |n| n == layout.parties(), &format!("layout {layout} needs N = {}", layout.parties()))?;
    opts.validate()?;
    let m = t.correlation_part();
    let n = t.n_qubits();
    let coeffs = ineq.coefficients();

    let mut best: Option<(f64, Settings, bool)> = None;
    let mut degenerate_updates = 0usize;
    for r in 0..opts.restarts {
        let mut rng = opts.rng(r);
        let mut settings: Vec<Vec<Vector3<f64>>> = layout
            .settings()
            .iter()
            .map(|&mj| (0..mj).map(|_| random_unit(&mut rng)).collect())
            .collect();
        let mut value = expression_value(&m, &settings, coeffs);
        let mut converged = false;
        for _ in 0..opts.max_sweeps {
            let before = value;
            for j in 0..n {
                let g = party_gradients(&m, &settings, coeffs, j);
                for (a, gk) in settings[j].iter_mut().zip(&g) {
                    match gk.try_normalize(1e-14) {
                        Some(u) => *a = u,
                        None => degenerate_updates += 1,
                    }
                }
            }
            value = expression_value(&m, &settings, coeffs);
            if value - before < opts.tolerance {
                converged = true;
                break;
            }
        }
        if best.as_ref().is_none_or(|b| value > b.0) {
            best = Some((value, settings, converged));
        }
    }
    let (value, settings, converged) = best.expect("at least one restart");
    let settings = settings
        .into_iter()
        .map(|vs| {
            vs.into_iter()
                .map(|v| SettingVector::normalized([v.x, v.y, v.z]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::InvalidParameter(format!("optimizer produced an invalid setting: {e}")))?;
    Ok(BellValue {
        value,
        settings,
        converged,
        degenerate_updates,
    })
}
