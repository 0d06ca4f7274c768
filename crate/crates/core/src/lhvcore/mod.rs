//! Local-realistic correlation tables, the complete two-setting inequality
//! family, explicit hidden-variable models and polytope membership.
//!
//! Conventions shared by everything in this module:
//!
//! * Setting indices are 0-based internally (`k = 0` is the first setting).
//! * Correlation tables are flat, party-1-major.
//! * A sign tuple `s in {-1,+1}^N` is encoded as the integer whose bit
//!   `N-1-j` is set iff `s_j = -1`. For a `2 x ... x 2` layout the same
//!   encoding maps setting tuples `k` (bit set iff party `j` uses its second
//!   setting) to the flat table index, so `s_1^(k_1-1) ... s_N^(k_N-1)` is
//!   `(-1)^popcount(s & k)`.
//! * A deterministic strategy stores one word per party; bit `k` set means
//!   the predetermined outcome for setting `k` is `-1`.

mod polytope;
mod simplex;

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::json;
use crate::multiset::BellInequality;
use crate::tensor;

pub use polytope::{polytope_membership, Membership, SeparatingInequality, MAX_VERTEX_LOG2};

const RANGE_TOL: f64 = 1e-9;
const WEIGHT_TOL: f64 = 1e-12;
/// Tables within this distance of the general bound are treated as saturating it.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct ExperimentLayout(Vec<usize>);

impl<'de> Deserialize<'de> for ExperimentLayout {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        ExperimentLayout::new(v).map_err(D::Error::custom)
    }
}

impl ExperimentLayout {
    pub fn new(settings_per_party: Vec<usize>) -> Result<Self> {
        if settings_per_party.is_empty() {
            return Err(Error::InvalidLayout("at least one party is required".into()));
        }
        if let Some(p) = settings_per_party.iter().position(|&m| m == 0) {
            return Err(Error::InvalidLayout(format!("party {} has no settings", p + 1)));
        }
        if settings_per_party.iter().any(|&m| m > 32) {
            return Err(Error::InvalidLayout("more than 32 settings for one party".into()));
        }
        Ok(ExperimentLayout(settings_per_party))
    }

    /// `2 x 2 x ... x 2` with `n` parties.
    pub fn two_setting(n: usize) -> Result<Self> {
        ExperimentLayout::new(vec![2; n])
    }

    pub fn parties(&self) -> usize {
        self.0.len()
    }

    pub fn settings(&self) -> &[usize] {
        &self.0
    }

    /// Number of correlation functions, `prod m_j`.
    pub fn dimension(&self) -> usize {
        tensor::volume(&self.0)
    }

    /// `log2` of the number of deterministic strategies, `sum m_j`.
    pub fn vertex_count_log2(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_two_setting(&self) -> bool {
        self.0.iter().all(|&m| m == 2)
    }

    /// Flat index of a setting tuple.
    pub fn flat_index(&self, k: &[usize]) -> usize {
        assert_eq!(k.len(), self.0.len());
        k.iter().zip(&self.0).fold(0, |acc, (&k, &m)| {
            assert!(k < m, "setting index {k} out of range {m}");
            acc * m + k
        })
    }

    pub(crate) fn require_two_setting(&self) -> Result<()> {
        if self.is_two_setting() {
            Ok(())
        } else {
            Err(Error::InvalidLayout(format!(
                "expected a two-setting layout, got {}",
                self
            )))
        }
    }
}

impl std::fmt::Display for ExperimentLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|m| m.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl std::str::FromStr for ExperimentLayout {
    type Err = Error;

    /// Parses `4x4x2`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: std::result::Result<Vec<usize>, _> = s.trim().split(['x', 'X', '×']).map(|p| p.trim().parse()).collect();
        ExperimentLayout::new(parts.map_err(|_| Error::InvalidLayout(format!("cannot parse layout `{s}`")))?)
    }
}

/// Correlation functions `E(k_1, ..., k_N)` over a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    layout: ExperimentLayout,
    values: Vec<f64>,
}

impl CorrelationTable {
    pub fn new(layout: ExperimentLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.dimension() {
            return Err(Error::DimensionMismatch {
                expected: layout.dimension(),
                actual: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|x| !x.is_finite() || x.abs() > 1.0 + RANGE_TOL) {
            return Err(Error::InvalidTable(format!("value {bad} outside [-1, 1]")));
        }
        Ok(CorrelationTable { layout, values })
    }

    pub fn zeros(layout: ExperimentLayout) -> Self {
        let values = vec![0.0; layout.dimension()];
        CorrelationTable { layout, values }
    }

    pub fn layout(&self) -> &ExperimentLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, k: &[usize]) -> f64 {
        self.values[self.layout.flat_index(k)]
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "layout": self.layout.settings(),
            "values": json::to_nested(&self.values, self.layout.settings(), |x| serde_json::json!(x)),
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Json("correlation table must be a JSON object".into()))?;
        if let Some(k) = obj.keys().find(|k| *k != "layout" && *k != "values") {
            return Err(Error::Json(format!("unknown field `{k}`")));
        }
        let layout: ExperimentLayout = serde_json::from_value(
            obj.get("layout")
                .cloned()
                .ok_or_else(|| Error::Json("missing field `layout`".into()))?,
        )?;
        let values = obj
            .get("values")
            .ok_or_else(|| Error::Json("missing field `values`".into()))?;
        let flat = json::from_nested(values, layout.settings(), Value::as_f64)?;
        CorrelationTable::new(layout, flat)
    }
}

impl Serialize for CorrelationTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CorrelationTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        CorrelationTable::from_json(&v).map_err(D::Error::custom)
    }
}

/// `+1`/`-1` for bit `0`/`1`.
#[inline]
pub(crate) fn sign_of_bit(bit: bool) -> i64 {
    if bit {
        -1
    } else {
        1
    }
}

/// A `{-1,+1}`-valued function on `{-1,+1}^arity`; `bits[i]` set means
/// `S = -1` at the sign tuple encoded by `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignFunction {
    arity: usize,
    bits: Vec<bool>,
}

/// Largest arity accepted by [`SignFunction`].
pub const MAX_SIGN_ARITY: usize = 16;

impl SignFunction {
    pub fn new(arity: usize, bits: Vec<bool>) -> Result<Self> {
        if arity == 0 || arity > MAX_SIGN_ARITY {
            return Err(Error::InvalidSignFunction(format!("arity {arity} out of range")));
        }
        if bits.len() != 1 << arity {
            return Err(Error::InvalidSignFunction(format!(
                "arity {arity} needs {} values, got {}",
                1usize << arity,
                bits.len()
            )));
        }
        Ok(SignFunction { arity, bits })
    }

    /// Parses a string of `2^arity` characters `0`/`1`; the arity is inferred.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let s = s.trim();
        let len = s.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidSignFunction(format!(
                "bitstring length {len} is not 2^arity for arity >= 1"
            )));
        }
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidSignFunction(format!("unexpected character `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        SignFunction::new(len.trailing_zeros() as usize, bits)
    }

    /// The `index`-th function in enumeration order: bit `i` of `index` is `bits[i]`.
    pub fn from_index(arity: usize, index: u64) -> Result<Self> {
        if arity > 6 {
            return Err(Error::InvalidSignFunction("index form limited to arity <= 6".into()));
        }
        let bits = (0..1usize << arity).map(|i| (index >> i) & 1 == 1).collect();
        SignFunction::new(arity, bits)
    }

    pub fn from_fn(arity: usize, f: impl Fn(&[i64]) -> i64) -> Result<Self> {
        let mut bits = Vec::with_capacity(1 << arity);
        for i in 0..1usize << arity {
            let s = sign_tuple(arity, i);
            match f(&s) {
                1 => bits.push(false),
                -1 => bits.push(true),
                v => return Err(Error::InvalidSignFunction(format!("value {v} is not +-1"))),
            }
        }
        SignFunction::new(arity, bits)
    }

    pub fn constant(arity: usize) -> Result<Self> {
        SignFunction::new(arity, vec![false; 1 << arity])
    }

    /// `sqrt(2) sin(3pi/4 + (s_1 + s_2 - 2) pi/4)`: `-1` only at `s = (-1, -1)`.
    pub fn chsh() -> Self {
        SignFunction {
            arity: 2,
            bits: vec![false, false, false, true],
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Value at the encoded sign tuple `index`.
    pub fn at(&self, index: usize) -> i64 {
        sign_of_bit(self.bits[index])
    }

    /// Value at an explicit tuple of `+-1` entries.
    pub fn value(&self, s: &[i64]) -> i64 {
        assert_eq!(s.len(), self.arity);
        self.at(encode_signs(s))
    }

    /// `c(k) = sum_s S(s) prod_{j : k_j = 1} s_j`, the coefficient of `E(k)` in
    /// `sum_s S(s) sum_k s_1^(k_1-1) ... s_N^(k_N-1) E(k)`.
    pub fn walsh_coefficients(&self) -> Vec<i64> {
        let mut c: Vec<i64> = (0..self.bits.len()).map(|i| self.at(i)).collect();
        walsh_hadamard_i64(&mut c);
        c
    }

    /// The member of the two-setting family selected by this function, with bound `2^N`.
    pub fn to_inequality(&self) -> BellInequality {
        BellInequality::new(
            ExperimentLayout::two_setting(self.arity).expect("arity >= 1"),
            self.walsh_coefficients(),
            1i64 << self.arity,
        )
        .expect("Walsh transform of a sign function is never identically zero")
    }
}

/// Decodes a sign tuple index into `+-1` entries, party 1 first.
pub fn sign_tuple(arity: usize, index: usize) -> Vec<i64> {
    (0..arity)
        .map(|j| sign_of_bit((index >> (arity - 1 - j)) & 1 == 1))
        .collect()
}

pub fn encode_signs(s: &[i64]) -> usize {
    s.iter().fold(0, |acc, &x| {
        assert!(x == 1 || x == -1, "sign entries must be +-1");
        (acc << 1) | usize::from(x == -1)
    })
}

pub(crate) fn walsh_hadamard_f64(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

pub(crate) fn walsh_hadamard_i64(v: &mut [i64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// `W(s) = sum_k s_1^(k_1-1) ... s_N^(k_N-1) E(k)` for every sign tuple.
fn walsh_of_table(table: &CorrelationTable) -> Result<Vec<f64>> {
    table.layout.require_two_setting()?;
    let mut w = table.values.clone();
    walsh_hadamard_f64(&mut w);
    Ok(w)
}

/// Left-hand side of the single general inequality
/// `sum_s |sum_k s_1^(k_1-1) ... s_N^(k_N-1) E(k)| <= 2^N`.
pub fn general_bell_lhs(table: &CorrelationTable) -> Result<f64> {
    Ok(walsh_of_table(table)?.iter().map(|w| w.abs()).sum())
}

/// `|sum_s S(s) sum_k s_1^(k_1-1) ... s_N^(k_N-1) E(k)|`; the local bound is `2^N`.
pub fn evaluate_sign_inequality(table: &CorrelationTable, sign: &SignFunction) -> Result<f64> {
    let n = table.layout.parties();
    if sign.arity != n {
        return Err(Error::ArityMismatch {
            expected: n,
            actual: sign.arity,
        });
    }
    let w = walsh_of_table(table)?;
    Ok(w.iter().enumerate().map(|(i, w)| sign.at(i) as f64 * w).sum::<f64>().abs())
}

/// The sign function `S(s) = sign W(s)` that attains [`general_bell_lhs`]
/// (ties at `W(s) = 0` take `+1`).
pub fn maximizing_sign_function(table: &CorrelationTable) -> Result<SignFunction> {
    let w = walsh_of_table(table)?;
    SignFunction::new(table.layout.parties(), w.iter().map(|&x| x < 0.0).collect())
}

/// All `2^(2^N)` sign functions of arity `n`, in index order.
pub fn enumerate_sign_functions(n: usize) -> Result<impl Iterator<Item = SignFunction>> {
    if n == 0 || n > 4 {
        return Err(Error::EnumerationTooLarge(n));
    }
    let count = 1u64 << (1u32 << n);
    Ok((0..count).map(move |i| SignFunction::from_index(n, i).expect("arity checked")))
}

/// `P(s) = 2^-N |W(s)|` for every sign tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenProbabilities {
    arity: usize,
    values: Vec<f64>,
}

impl HiddenProbabilities {
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Indexed by encoded sign tuple.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: &[i64]) -> f64 {
        self.values[encode_signs(s)]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `1 - sum_s P(s)`, clamped at zero.
    pub fn deficit(&self) -> f64 {
        (1.0 - self.total()).max(0.0)
    }
}

pub fn hidden_probabilities(table: &CorrelationTable) -> Result<HiddenProbabilities> {
    let n = table.layout.parties();
    let scale = 1.0 / (1u64 << n) as f64;
    let w = walsh_of_table(table)?;
    Ok(HiddenProbabilities {
        arity: n,
        values: w.iter().map(|w| w.abs() * scale).collect(),
    })
}

/// Predetermined `+-1` outcomes for every party and setting.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeterministicStrategy {
    outcomes: Vec<u32>,
}

impl DeterministicStrategy {
    /// One word per party; bit `k` set means outcome `-1` for setting `k`.
    pub fn new(outcomes: Vec<u32>) -> Self {
        DeterministicStrategy { outcomes }
    }

    pub fn from_signs(signs: &[Vec<i64>]) -> Self {
        let outcomes = signs
            .iter()
            .map(|party| {
                party.iter().enumerate().fold(0u32, |acc, (k, &a)| {
                    assert!(a == 1 || a == -1);
                    acc | (u32::from(a == -1) << k)
                })
            })
            .collect();
        DeterministicStrategy { outcomes }
    }

    /// Strategy number `index` of the layout; party 1 occupies the highest bits.
    pub fn from_vertex_index(layout: &ExperimentLayout, mut index: u64) -> Self {
        let mut outcomes = vec![0u32; layout.parties()];
        for (j, &m) in layout.settings().iter().enumerate().rev() {
            outcomes[j] = (index & ((1u64 << m) - 1)) as u32;
            index >>= m;
        }
        DeterministicStrategy { outcomes }
    }

    pub fn vertex_index(&self, layout: &ExperimentLayout) -> u64 {
        self.outcomes
            .iter()
            .zip(layout.settings())
            .fold(0u64, |acc, (&w, &m)| (acc << m) | u64::from(w))
    }

    pub fn words(&self) -> &[u32] {
        &self.outcomes
    }

    pub fn outcome(&self, party: usize, setting: usize) -> i64 {
        sign_of_bit((self.outcomes[party] >> setting) & 1 == 1)
    }

    pub fn fits(&self, layout: &ExperimentLayout) -> bool {
        self.outcomes.len() == layout.parties()
            && self
                .outcomes
                .iter()
                .zip(layout.settings())
                .all(|(&w, &m)| m >= 32 || w >> m == 0)
    }

    /// Flips the outcome of one setting of one party.
    pub fn flipped(&self, party: usize, setting: usize) -> Self {
        let mut o = self.outcomes.clone();
        o[party] ^= 1 << setting;
        DeterministicStrategy { outcomes: o }
    }

    /// The vertex `A_1 x ... x A_N` of the correlation polytope.
    pub fn vertex(&self, layout: &ExperimentLayout) -> Vec<i64> {
        let mut v = vec![1i64];
        for (j, &m) in layout.settings().iter().enumerate() {
            let mut next = Vec::with_capacity(v.len() * m);
            for &x in &v {
                for k in 0..m {
                    next.push(x * self.outcome(j, k));
                }
            }
            v = next;
        }
        v
    }

    pub fn table(&self, layout: &ExperimentLayout) -> CorrelationTable {
        let values = self.vertex(layout).into_iter().map(|x| x as f64).collect();
        CorrelationTable {
            layout: layout.clone(),
            values,
        }
    }
}

/// A probability distribution over deterministic strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct LhvModel {
    layout: ExperimentLayout,
    weights: BTreeMap<DeterministicStrategy, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightEntry {
    strategy: DeterministicStrategy,
    weight: f64,
}

impl LhvModel {
    pub fn new(layout: ExperimentLayout, weights: BTreeMap<DeterministicStrategy, f64>) -> Result<Self> {
        let mut total = 0.0;
        for (s, &w) in &weights {
            if !s.fits(&layout) {
                return Err(Error::InvalidModel(format!("strategy {:?} does not fit layout {layout}", s.words())));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidModel(format!("negative or non-finite weight {w}")));
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidModel(format!("weights sum to {total}, expected 1")));
        }
        Ok(LhvModel { layout, weights })
    }

    pub fn layout(&self) -> &ExperimentLayout {
        &self.layout
    }

    pub fn weights(&self) -> &BTreeMap<DeterministicStrategy, f64> {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.values().sum()
    }

    /// JSON list of `{"strategy": [...], "weight": w}`.
    pub fn to_json(&self) -> Value {
        let entries: Vec<WeightEntry> = self
            .weights
            .iter()
            .map(|(s, &w)| WeightEntry {
                strategy: s.clone(),
                weight: w,
            })
            .collect();
        serde_json::to_value(entries).expect("plain data")
    }

    pub fn from_json(layout: ExperimentLayout, value: &Value) -> Result<Self> {
        let entries: Vec<WeightEntry> = serde_json::from_value(value.clone())?;
        let mut weights = BTreeMap::new();
        for e in entries {
            *weights.entry(e.strategy).or_insert(0.0) += e.weight;
        }
        LhvModel::new(layout, weights)
    }
}

/// Explicit local-realistic model for a two-setting table satisfying the
/// general inequality.
///
/// Each sign tuple `s` with `P(s) > 0` contributes the strategy whose vertex is
/// `sign(W(s)) (1, s_1) x ... x (1, s_N)`: party 1 carries the sign, i.e.
/// `A_1 = (sigma, sigma s_1)` and `A_j = (1, s_j)` for `j > 1`. The deficit
/// `1 - sum_s P(s)` is spread uniformly over all `4^N` strategies, which
/// leaves every correlation function unchanged.
pub fn construct_lhv_model(table: &CorrelationTable) -> Result<LhvModel> {
    let n = table.layout.parties();
    let w = walsh_of_table(table)?;
    let lhs: f64 = w.iter().map(|x| x.abs()).sum();
    let bound = (1u64 << n) as f64;
    if lhs > bound + BOUNDARY_TOL {
        return Err(Error::InequalityViolated { lhs, bound });
    }
    let scale = 1.0 / bound;
    let mut weights: BTreeMap<DeterministicStrategy, f64> = BTreeMap::new();
    let mut total = 0.0;
    for (i, &wi) in w.iter().enumerate() {
        let p = wi.abs() * scale;
        if p == 0.0 {
            continue;
        }
        total += p;
        let s = sign_tuple(n, i);
        let sigma = if wi < 0.0 { -1 } else { 1 };
        let signs: Vec<Vec<i64>> = s
            .iter()
            .enumerate()
            .map(|(j, &sj)| {
                let lead = if j == 0 { sigma } else { 1 };
                vec![lead, lead * sj]
            })
            .collect();
        *weights.entry(DeterministicStrategy::from_signs(&signs)).or_insert(0.0) += p;
    }
    let deficit = (1.0 - total).max(0.0);
    if deficit > 0.0 {
        let count = 1u64 << table.layout.vertex_count_log2();
        let tail = deficit / count as f64;
        for v in 0..count {
            *weights
                .entry(DeterministicStrategy::from_vertex_index(&table.layout, v))
                .or_insert(0.0) += tail;
        }
    }
    LhvModel::new(table.layout.clone(), weights)
}

/// `E(k) = sum_strategies weight * prod_j A_j(k_j)`.
pub fn evaluate_model(model: &LhvModel) -> CorrelationTable {
    let mut values = vec![0.0; model.layout.dimension()];
    for (s, &w) in &model.weights {
        for (v, x) in values.iter_mut().zip(s.vertex(&model.layout)) {
            *v += w * x as f64;
        }
    }
    CorrelationTable {
        layout: model.layout.clone(),
        values,
    }
}

/// `sum_k c(k) E(k)`; compare with `ineq.bound()`.
pub fn evaluate_inequality(ineq: &BellInequality, table: &CorrelationTable) -> Result<f64> {
    if ineq.layout() != table.layout() {
        return Err(Error::LayoutMismatch(format!(
            "inequality layout {} vs table layout {}",
            ineq.layout(),
            table.layout()
        )));
    }
    Ok(ineq
        .coefficients()
        .iter()
        .zip(&table.values)
        .map(|(&c, &e)| c as f64 * e)
        .sum())
}
