//! Multisetting Bell inequalities generated from recursive sign-function
//! identities, exact tightness checks and setting identification.

mod rank;
mod tree;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::json;
use crate::lhvcore::{DeterministicStrategy, ExperimentLayout, SignFunction, MAX_VERTEX_LOG2};

pub use rank::integer_rank;
pub use tree::{
    doubling_layout, doubling_sign_count, tree_442, tree_88444, tree_doubling, tree_four_by_two,
    ConstructionTree,
};

/// `|sum_k c(k) E(k)| <= bound` with integer coefficients over a layout.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BellInequality {
    layout: ExperimentLayout,
    coefficients: Vec<i64>,
    bound: i64,
}

impl BellInequality {
    pub fn new(layout: ExperimentLayout, coefficients: Vec<i64>, bound: i64) -> Result<Self> {
        if coefficients.len() != layout.dimension() {
            return Err(Error::DimensionMismatch {
                expected: layout.dimension(),
                actual: coefficients.len(),
            });
        }
        if bound <= 0 {
            return Err(Error::InvalidInequality(format!("bound must be positive, got {bound}")));
        }
        if coefficients.iter().all(|&c| c == 0) {
            return Err(Error::InvalidInequality("all coefficients are zero".into()));
        }
        Ok(BellInequality {
            layout,
            coefficients,
            bound,
        })
    }

    pub fn layout(&self) -> &ExperimentLayout {
        &self.layout
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.coefficients
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    pub fn coefficient(&self, k: &[usize]) -> i64 {
        self.coefficients[self.layout.flat_index(k)]
    }

    /// Value of the expression on a deterministic strategy.
    pub fn value_at(&self, strategy: &DeterministicStrategy) -> i64 {
        contract_strategy(&self.layout, &self.coefficients, strategy)
    }

    /// The inequality obtained by `A_party(setting) -> -A_party(setting)`.
    pub fn flip_observable(&self, party: usize, setting: usize) -> Result<Self> {
        let m = self.layout.settings();
        if party >= m.len() || setting >= m[party] {
            return Err(Error::InvalidParameter(format!(
                "no setting {setting} for party {party} in layout {}",
                self.layout
            )));
        }
        let stride: usize = m[party + 1..].iter().product();
        let mut c = self.coefficients.clone();
        for (i, x) in c.iter_mut().enumerate() {
            if (i / stride) % m[party] == setting {
                *x = -*x;
            }
        }
        Ok(BellInequality {
            layout: self.layout.clone(),
            coefficients: c,
            bound: self.bound,
        })
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "layout": self.layout.settings(),
            "coefficients": json::to_nested(&self.coefficients, self.layout.settings(), |&c| Value::from(c)),
            "bound": self.bound,
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::InvalidInequality("expected a JSON object".into()))?;
        if let Some(k) = obj.keys().find(|k| !["layout", "coefficients", "bound"].contains(&k.as_str())) {
            return Err(Error::InvalidInequality(format!("unknown field `{k}`")));
        }
        let layout: ExperimentLayout = serde_json::from_value(
            obj.get("layout")
                .cloned()
                .ok_or_else(|| Error::InvalidInequality("missing `layout`".into()))?,
        )?;
        let coeffs = obj
            .get("coefficients")
            .ok_or_else(|| Error::InvalidInequality("missing `coefficients`".into()))?;
        let coefficients = json::from_nested(coeffs, layout.settings(), json::as_exact_i64)
            .map_err(|e| Error::InvalidInequality(format!("coefficients: {e}")))?;
        let bound = obj
            .get("bound")
            .and_then(json::as_exact_i64)
            .ok_or_else(|| Error::InvalidInequality("`bound` must be an integer".into()))?;
        BellInequality::new(layout, coefficients, bound)
    }
}

impl Serialize for BellInequality {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BellInequality {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        BellInequality::from_json(&v).map_err(D::Error::custom)
    }
}

/// `sum_k c(k) prod_j A_j(k_j)`, contracting one party at a time from the last.
fn contract_strategy(layout: &ExperimentLayout, coeffs: &[i64], strategy: &DeterministicStrategy) -> i64 {
    let mut cur = coeffs.to_vec();
    for (j, &m) in layout.settings().iter().enumerate().rev() {
        let next: Vec<i64> = cur
            .chunks_exact(m)
            .map(|row| row.iter().enumerate().map(|(k, &c)| c * strategy.outcome(j, k)).sum())
            .collect();
        cur = next;
    }
    cur[0]
}

/// Calls `f(vertex_index, value)` for every deterministic strategy, in index
/// order. Parties are fixed one at a time, contracting the coefficient table
/// as it goes, so the cost is dominated by the last two parties.
fn for_each_vertex_value(layout: &ExperimentLayout, coeffs: &[i64], f: &mut impl FnMut(u64, i64)) {
    fn rec(m: &[usize], coeffs: &[i64], prefix: u64, f: &mut impl FnMut(u64, i64)) {
        let Some((&mj, rest)) = m.split_first() else {
            f(prefix, coeffs[0]);
            return;
        };
        let stride = coeffs.len() / mj;
        let mut partial = vec![0i64; stride];
        for w in 0..1u64 << mj {
            partial.iter_mut().for_each(|x| *x = 0);
            for (k, block) in coeffs.chunks_exact(stride).enumerate() {
                if (w >> k) & 1 == 1 {
                    partial.iter_mut().zip(block).for_each(|(p, &c)| *p -= c);
                } else {
                    partial.iter_mut().zip(block).for_each(|(p, &c)| *p += c);
                }
            }
            rec(rest, &partial, (prefix << mj) | w, f);
        }
    }
    rec(layout.settings(), coeffs, 0, f);
}

/// Largest `log2(#vertices)` accepted by [`vertex_sweep`].
pub const MAX_SWEEP_LOG2: usize = 24;

/// Extremes of the expression over all deterministic strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VertexSweep {
    pub min: i64,
    pub max: i64,
    /// Deterministic strategies visited, `2^(sum_j m_j)`.
    pub strategy_count: u64,
}

impl VertexSweep {
    pub fn max_abs(&self) -> i64 {
        self.min.abs().max(self.max.abs())
    }
}

/// Evaluates the inequality on every vertex; no rank computation.
pub fn vertex_sweep(ineq: &BellInequality) -> Result<VertexSweep> {
    let log2 = ineq.layout.vertex_count_log2();
    if log2 > MAX_SWEEP_LOG2 {
        return Err(Error::SizeLimit(format!(
            "layout {} has 2^{log2} vertices, sweep limit is 2^{MAX_SWEEP_LOG2}",
            ineq.layout
        )));
    }
    let (mut min, mut max) = (i64::MAX, i64::MIN);
    for_each_vertex_value(&ineq.layout, &ineq.coefficients, &mut |_, v| {
        min = min.min(v);
        max = max.max(v);
    });
    Ok(VertexSweep {
        min,
        max,
        strategy_count: 1 << log2,
    })
}

/// Expands `sum S(s1,s2) [A_{12,12;S'} + s1 A_{34,34;S''}][A_3(1) + s2 A_3(2)]`
/// over the `4 x 4 x 2` layout; bound 16.
pub fn build_442(s: &SignFunction, s_prime: &SignFunction, s_dprime: &SignFunction) -> Result<BellInequality> {
    for f in [s, s_prime, s_dprime] {
        if f.arity() != 2 {
            return Err(Error::ArityMismatch {
                expected: 2,
                actual: f.arity(),
            });
        }
    }
    build_recursive(&tree_442(s, s_prime, s_dprime))
}

/// Expands a construction tree; the bound is the identity magnitude.
pub fn build_recursive(tree: &ConstructionTree) -> Result<BellInequality> {
    let (layout, coefficients, magnitude) = tree.expand_dense()?;
    BellInequality::new(layout, coefficients, magnitude)
}

/// Result of [`check_tightness`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TightnessReport {
    pub is_tight: bool,
    /// `max |value|` over all vertices does not exceed the bound.
    pub valid: bool,
    /// Distinct correlation vectors, `2^(sum_j m_j - N + 1)`.
    pub vertex_count: u64,
    /// Vertices reaching `+bound`.
    pub saturating_count: u64,
    /// Linear rank of the saturating vertices.
    pub affine_rank: usize,
    /// Dimension of the correlation space, `prod_j m_j`.
    pub dimension: usize,
}

/// Vertex-index bits holding the first-setting outcome of parties `2..N`.
/// Flipping every outcome of two parties leaves all products unchanged, so
/// strategies with those bits clear represent each distinct vertex once.
fn gauge_mask(layout: &ExperimentLayout) -> u64 {
    let mut mask = 0u64;
    let mut shift = 0;
    for (j, &m) in layout.settings().iter().enumerate().rev() {
        if j > 0 {
            mask |= 1 << shift;
        }
        shift += m;
    }
    mask
}

/// Enumerates every distinct deterministic vertex, counts those at `+bound` and takes the
/// exact rank of that set. Tight iff valid and the rank equals the dimension.
pub fn check_tightness(ineq: &BellInequality) -> Result<TightnessReport> {
    let layout = ineq.layout();
    let log2 = layout.vertex_count_log2();
    if log2 > MAX_VERTEX_LOG2 {
        return Err(Error::SizeLimit(format!(
            "layout {layout} has 2^{log2} vertices, limit is 2^{MAX_VERTEX_LOG2}"
        )));
    }
    let dimension = layout.dimension();
    let gauge = gauge_mask(layout);
    let vertex_count = 1u64 << (log2 + 1 - layout.parties());
    let mut basis = rank::EchelonBasis::new(dimension);
    let mut valid = true;
    let mut saturating_count = 0u64;
    let mut failure = None;
    for_each_vertex_value(layout, &ineq.coefficients, &mut |v, value| {
        if v & gauge != 0 {
            return;
        }
        if value.abs() > ineq.bound {
            valid = false;
        }
        if value == ineq.bound {
            saturating_count += 1;
            if failure.is_none() && !basis.is_full() {
                let s = DeterministicStrategy::from_vertex_index(layout, v);
                if let Err(e) = basis.insert(&s.vertex(layout)) {
                    failure = Some(e);
                }
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let affine_rank = basis.rank();
    Ok(TightnessReport {
        is_tight: valid && affine_rank == dimension,
        valid,
        vertex_count,
        saturating_count,
        affine_rank,
        dimension,
    })
}

/// Identifies settings: `maps[j][k]` is the new index of setting `k` of party `j`.
/// Coefficients of merged settings are summed; the bound is kept.
pub fn reduce_settings(ineq: &BellInequality, maps: &[Vec<usize>]) -> Result<BellInequality> {
    let old = ineq.layout().settings();
    if maps.len() != old.len() {
        return Err(Error::InvalidSettingMap(format!(
            "expected one map per party ({}), got {}",
            old.len(),
            maps.len()
        )));
    }
    let mut new_m = Vec::with_capacity(old.len());
    for (j, (map, &m)) in maps.iter().zip(old).enumerate() {
        if map.len() != m {
            return Err(Error::InvalidSettingMap(format!(
                "party {j} has {m} settings but the map has {} entries",
                map.len()
            )));
        }
        let size = map.iter().max().map_or(0, |&x| x + 1);
        let mut hit = vec![false; size];
        map.iter().for_each(|&x| hit[x] = true);
        if let Some(missing) = hit.iter().position(|&h| !h) {
            return Err(Error::InvalidSettingMap(format!(
                "party {j}: reduced setting {missing} has no preimage"
            )));
        }
        new_m.push(size);
    }
    let new_layout = ExperimentLayout::new(new_m)?;
    let mut coeffs = vec![0i64; new_layout.dimension()];
    let mut k = vec![0usize; old.len()];
    let mut target = vec![0usize; old.len()];
    for &c in ineq.coefficients() {
        for j in 0..k.len() {
            target[j] = maps[j][k[j]];
        }
        coeffs[new_layout.flat_index(&target)] += c;
        // Advance the odometer, last party fastest.
        for j in (0..k.len()).rev() {
            k[j] += 1;
            if k[j] < old[j] {
                break;
            }
            k[j] = 0;
        }
    }
    BellInequality::new(new_layout, coeffs, ineq.bound)
}
