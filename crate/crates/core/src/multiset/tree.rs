//! Recursive sign-function identities and their expansion into coefficients.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::lhvcore::{ExperimentLayout, SignFunction};

/// An expression in the predetermined outcomes that evaluates to `+-magnitude`
/// on every deterministic strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstructionTree {
    /// A single outcome `A_party(setting)`; magnitude 1.
    Observable { party: usize, setting: usize },
    /// `sum_s S(s) prod_j [A_{p_j}(a_j) + s_j A_{p_j}(b_j)]` with `settings[j] = [a_j, b_j]`;
    /// magnitude `2^n` for `n` parties.
    Leaf {
        parties: Vec<usize>,
        settings: Vec<[usize; 2]>,
        sign: SignFunction,
    },
    /// `sum_{s1,s2} S(s1,s2) [first + s1 second][third + s2 fourth]`;
    /// magnitude `4 |first| |third|`.
    Node {
        sign: SignFunction,
        first: Box<ConstructionTree>,
        second: Box<ConstructionTree>,
        third: Box<ConstructionTree>,
        fourth: Box<ConstructionTree>,
    },
}

/// Sparse multilinear polynomial over the outcomes of a fixed party set.
/// Keys list one setting per party, in the order of `parties`.
#[derive(Debug, Clone)]
struct Poly {
    parties: Vec<usize>,
    terms: BTreeMap<Vec<usize>, i64>,
}

impl Poly {
    fn product(&self, other: &Poly) -> Poly {
        let mut parties: Vec<usize> = self.parties.iter().chain(&other.parties).copied().collect();
        parties.sort_unstable();
        let mut terms = BTreeMap::new();
        for (ka, &ca) in &self.terms {
            for (kb, &cb) in &other.terms {
                let mut by_party: BTreeMap<usize, usize> = BTreeMap::new();
                by_party.extend(self.parties.iter().copied().zip(ka.iter().copied()));
                by_party.extend(other.parties.iter().copied().zip(kb.iter().copied()));
                let key: Vec<usize> = by_party.into_values().collect();
                *terms.entry(key).or_insert(0) += ca * cb;
            }
        }
        Poly { parties, terms }
    }

    fn add_scaled(&mut self, other: &Poly, factor: i64) {
        debug_assert_eq!(self.parties, other.parties);
        if factor == 0 {
            return;
        }
        for (k, &c) in &other.terms {
            *self.terms.entry(k.clone()).or_insert(0) += factor * c;
        }
    }
}

impl ConstructionTree {
    pub fn observable(party: usize, setting: usize) -> Self {
        ConstructionTree::Observable { party, setting }
    }

    pub fn leaf(parties: Vec<usize>, settings: Vec<[usize; 2]>, sign: SignFunction) -> Self {
        ConstructionTree::Leaf {
            parties,
            settings,
            sign,
        }
    }

    pub fn node(
        sign: SignFunction,
        first: ConstructionTree,
        second: ConstructionTree,
        third: ConstructionTree,
        fourth: ConstructionTree,
    ) -> Self {
        ConstructionTree::Node {
            sign,
            first: Box::new(first),
            second: Box::new(second),
            third: Box::new(third),
            fourth: Box::new(fourth),
        }
    }

    /// Same tree with `offsets[party]` added to every setting index.
    pub fn shifted(&self, offsets: &[usize]) -> Self {
        let off = |p: usize| offsets.get(p).copied().unwrap_or(0);
        match self {
            ConstructionTree::Observable { party, setting } => ConstructionTree::Observable {
                party: *party,
                setting: setting + off(*party),
            },
            ConstructionTree::Leaf {
                parties,
                settings,
                sign,
            } => ConstructionTree::Leaf {
                parties: parties.clone(),
                settings: parties
                    .iter()
                    .zip(settings)
                    .map(|(&p, &[a, b])| [a + off(p), b + off(p)])
                    .collect(),
                sign: sign.clone(),
            },
            ConstructionTree::Node {
                sign,
                first,
                second,
                third,
                fourth,
            } => ConstructionTree::node(
                sign.clone(),
                first.shifted(offsets),
                second.shifted(offsets),
                third.shifted(offsets),
                fourth.shifted(offsets),
            ),
        }
    }

    /// Sign functions in pre-order (node before its subtrees).
    pub fn sign_functions(&self) -> Vec<&SignFunction> {
        let mut out = Vec::new();
        self.collect_signs(&mut out);
        out
    }

    fn collect_signs<'a>(&'a self, out: &mut Vec<&'a SignFunction>) {
        match self {
            ConstructionTree::Observable { .. } => {}
            ConstructionTree::Leaf { sign, .. } => out.push(sign),
            ConstructionTree::Node {
                sign,
                first,
                second,
                third,
                fourth,
            } => {
                out.push(sign);
                for t in [first, second, third, fourth] {
                    t.collect_signs(out);
                }
            }
        }
    }

    /// `log2` of the number of sign-function choices parameterizing this shape.
    pub fn parameter_bits(&self) -> usize {
        self.sign_functions().iter().map(|s| 1usize << s.arity()).sum()
    }

    /// Party set and identity magnitude; checks arities and party disjointness.
    pub fn validate(&self) -> Result<(BTreeSet<usize>, i64)> {
        match self {
            ConstructionTree::Observable { party, .. } => Ok((BTreeSet::from([*party]), 1)),
            ConstructionTree::Leaf {
                parties,
                settings,
                sign,
            } => {
                if parties.is_empty() {
                    return Err(Error::MalformedTree("leaf without parties".into()));
                }
                if sign.arity() != parties.len() {
                    return Err(Error::MalformedTree(format!(
                        "leaf sign function has arity {} for {} parties",
                        sign.arity(),
                        parties.len()
                    )));
                }
                if settings.len() != parties.len() {
                    return Err(Error::MalformedTree("leaf needs one setting pair per party".into()));
                }
                let set: BTreeSet<usize> = parties.iter().copied().collect();
                if set.len() != parties.len() {
                    return Err(Error::MalformedTree("leaf repeats a party".into()));
                }
                if parties.len() > 62 {
                    return Err(Error::MalformedTree("leaf too large".into()));
                }
                Ok((set, 1i64 << parties.len()))
            }
            ConstructionTree::Node {
                sign,
                first,
                second,
                third,
                fourth,
            } => {
                if sign.arity() != 2 {
                    return Err(Error::MalformedTree(format!(
                        "node sign function must have arity 2, got {}",
                        sign.arity()
                    )));
                }
                let (p1, m1) = first.validate()?;
                let (p2, m2) = second.validate()?;
                let (p3, m3) = third.validate()?;
                let (p4, m4) = fourth.validate()?;
                if p1 != p2 || m1 != m2 {
                    return Err(Error::MalformedTree(
                        "first and second blocks must cover the same parties with equal magnitude".into(),
                    ));
                }
                if p3 != p4 || m3 != m4 {
                    return Err(Error::MalformedTree(
                        "third and fourth blocks must cover the same parties with equal magnitude".into(),
                    ));
                }
                if !p1.is_disjoint(&p3) {
                    return Err(Error::MalformedTree("node blocks share a party".into()));
                }
                let mag = m1
                    .checked_mul(m3)
                    .and_then(|m| m.checked_mul(4))
                    .ok_or_else(|| Error::MalformedTree("identity magnitude overflows".into()))?;
                Ok((p1.union(&p3).copied().collect(), mag))
            }
        }
    }

    /// Per-party number of settings, `1 + max setting index`.
    pub fn layout(&self) -> Result<ExperimentLayout> {
        let (parties, _) = self.validate()?;
        let n = parties.len();
        if parties.iter().copied().ne(0..n) {
            return Err(Error::MalformedTree(format!(
                "parties {parties:?} do not cover 0..{n}"
            )));
        }
        let mut m = vec![0usize; n];
        self.visit_settings(&mut |p, s| m[p] = m[p].max(s + 1));
        ExperimentLayout::new(m)
    }

    fn visit_settings(&self, f: &mut impl FnMut(usize, usize)) {
        match self {
            ConstructionTree::Observable { party, setting } => f(*party, *setting),
            ConstructionTree::Leaf { parties, settings, .. } => {
                for (&p, &[a, b]) in parties.iter().zip(settings) {
                    f(p, a);
                    f(p, b);
                }
            }
            ConstructionTree::Node {
                first,
                second,
                third,
                fourth,
                ..
            } => {
                for t in [first, second, third, fourth] {
                    t.visit_settings(f);
                }
            }
        }
    }

    fn expand(&self) -> Poly {
        match self {
            ConstructionTree::Observable { party, setting } => Poly {
                parties: vec![*party],
                terms: BTreeMap::from([(vec![*setting], 1)]),
            },
            ConstructionTree::Leaf {
                parties,
                settings,
                sign,
            } => {
                let n = parties.len();
                let walsh = sign.walsh_coefficients();
                let mut sorted = parties.clone();
                sorted.sort_unstable();
                let mut terms = BTreeMap::new();
                for (mask, &c) in walsh.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let by_party: BTreeMap<usize, usize> = parties
                        .iter()
                        .enumerate()
                        .map(|(j, &p)| (p, settings[j][(mask >> (n - 1 - j)) & 1]))
                        .collect();
                    *terms.entry(by_party.into_values().collect()).or_insert(0) += c;
                }
                Poly { parties: sorted, terms }
            }
            ConstructionTree::Node {
                sign,
                first,
                second,
                third,
                fourth,
            } => {
                // Walsh index: bit 1 <-> s1, bit 0 <-> s2.
                let w = sign.walsh_coefficients();
                let (x, y, z, v) = (first.expand(), second.expand(), third.expand(), fourth.expand());
                let mut out = x.product(&z);
                out.terms.values_mut().for_each(|c| *c *= w[0b00]);
                out.add_scaled(&x.product(&v), w[0b01]);
                out.add_scaled(&y.product(&z), w[0b10]);
                out.add_scaled(&y.product(&v), w[0b11]);
                out
            }
        }
    }

    /// Dense coefficient table over `layout` and the identity magnitude.
    pub(crate) fn expand_dense(&self) -> Result<(ExperimentLayout, Vec<i64>, i64)> {
        let (_, magnitude) = self.validate()?;
        let layout = self.layout()?;
        let poly = self.expand();
        let mut coeffs = vec![0i64; layout.dimension()];
        for (k, c) in poly.terms {
            coeffs[layout.flat_index(&k)] += c;
        }
        Ok((layout, coeffs, magnitude))
    }
}

/// `sum S(s1,s2) [A_{12,12;S'} + s1 A_{34,34;S''}][A_3(1) + s2 A_3(2)]` on a `4 x 4 x 2` layout.
pub fn tree_442(s: &SignFunction, s_prime: &SignFunction, s_dprime: &SignFunction) -> ConstructionTree {
    tree_four_by_two(3, s, s_prime, s_dprime)
}

/// `N` parties, the first `N - 1` with four settings and the last with two:
/// `sum S(s1,s2) (A_{12,...,12;S'} + s1 A_{34,...,34;S''})(A_N(1) + s2 A_N(2))`.
/// `S'` and `S''` have arity `N - 1`.
pub fn tree_four_by_two(
    n: usize,
    s: &SignFunction,
    s_prime: &SignFunction,
    s_dprime: &SignFunction,
) -> ConstructionTree {
    let head: Vec<usize> = (0..n - 1).collect();
    ConstructionTree::node(
        s.clone(),
        ConstructionTree::leaf(head.clone(), vec![[0, 1]; n - 1], s_prime.clone()),
        ConstructionTree::leaf(head, vec![[2, 3]; n - 1], s_dprime.clone()),
        ConstructionTree::observable(n - 1, 0),
        ConstructionTree::observable(n - 1, 1),
    )
}

/// Settings per party of the doubling family: `2^(N-1) x 2^(N-1) x 2^(N-2) x ... x 2`.
pub fn doubling_layout(n: usize) -> Vec<usize> {
    (0..n).map(|j| 1usize << (n - j.max(1))).collect()
}

/// Number of sign functions consumed by [`tree_doubling`] for `n` parties.
pub fn doubling_sign_count(n: usize) -> usize {
    (1usize << (n - 1)) - 1
}

/// The doubling family: a two-party leaf for `N = 2`, and for `N > 2`
/// `sum S (T_{N-1} + s1 T'_{N-1})(A_N(1) + s2 A_N(2))` where `T'` uses the
/// second half of every earlier party's settings. Consumes sign functions in
/// pre-order; see [`doubling_sign_count`].
pub fn tree_doubling(n: usize, signs: &[SignFunction]) -> Result<ConstructionTree> {
    if n < 2 {
        return Err(Error::MalformedTree("doubling family needs at least two parties".into()));
    }
    if signs.len() != doubling_sign_count(n) {
        return Err(Error::MalformedTree(format!(
            "{n}-party doubling tree needs {} sign functions, got {}",
            doubling_sign_count(n),
            signs.len()
        )));
    }
    if n == 2 {
        return Ok(ConstructionTree::leaf(vec![0, 1], vec![[0, 1], [0, 1]], signs[0].clone()));
    }
    let half = doubling_sign_count(n - 1);
    let first = tree_doubling(n - 1, &signs[1..1 + half])?;
    let second = tree_doubling(n - 1, &signs[1 + half..])?.shifted(&doubling_layout(n - 1));
    Ok(ConstructionTree::node(
        signs[0].clone(),
        first,
        second,
        ConstructionTree::observable(n - 1, 0),
        ConstructionTree::observable(n - 1, 1),
    ))
}

/// The `8 x 8 x 4 x 4 x 4` family:
/// `sum S (A_{1234,12} + s1 A_{5678,34})(A_{12,12;S'} + s2 A_{34,34;S''})`,
/// with the last two parties forming two-party leaves on settings `{1,2}` and
/// `{3,4}`. Sign order: `S`, the three of `A_{1234,12}`, the three of
/// `A_{5678,34}`, then `S'`, `S''`.
pub fn tree_88444(signs: &[SignFunction]) -> Result<ConstructionTree> {
    if signs.len() != 9 {
        return Err(Error::MalformedTree(format!(
            "8x8x4x4x4 tree needs 9 sign functions, got {}",
            signs.len()
        )));
    }
    let a = tree_442(&signs[1], &signs[2], &signs[3]);
    let b = tree_442(&signs[4], &signs[5], &signs[6]).shifted(&[4, 4, 2]);
    Ok(ConstructionTree::node(
        signs[0].clone(),
        a,
        b,
        ConstructionTree::leaf(vec![3, 4], vec![[0, 1], [0, 1]], signs[7].clone()),
        ConstructionTree::leaf(vec![3, 4], vec![[2, 3], [2, 3]], signs[8].clone()),
    ))
}
