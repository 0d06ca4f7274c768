use std::collections::BTreeMap;

use serde_json::Value;

use super::simplex::phase_one;
use super::{CorrelationTable, DeterministicStrategy, ExperimentLayout, LhvModel};
use crate::error::{Error, Result};
use crate::json;
use crate::multiset::BellInequality;

/// Largest `log2(#vertices)` handled by vertex enumeration.
pub const MAX_VERTEX_LOG2: usize = 20;

/// Phase-1 optimum below which a table counts as inside the polytope.
const FEASIBILITY_TOL: f64 = 1e-9;

/// Outcome of [`polytope_membership`].
#[derive(Debug, Clone)]
pub enum Membership {
    Inside {
        model: LhvModel,
        /// Phase-1 optimum (sum of residual artificial variables).
        residual: f64,
    },
    Outside {
        certificate: SeparatingInequality,
        residual: f64,
    },
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside { .. })
    }
}

/// A real-coefficient Bell inequality `|c . E| <= bound` that holds on every
/// vertex of the polytope and is violated by the table it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatingInequality {
    layout: ExperimentLayout,
    coefficients: Vec<f64>,
    bound: f64,
}

impl SeparatingInequality {
    pub fn layout(&self) -> &ExperimentLayout {
        &self.layout
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Maximum of `|c . v|` over all deterministic vertices `v`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn value(&self, table: &CorrelationTable) -> f64 {
        self.coefficients.iter().zip(table.values()).map(|(c, e)| c * e).sum()
    }

    /// Integer form, if the coefficients are a rescaled integer vector and the
    /// exact local bound still separates `table`.
    pub fn to_integer(&self, table: &CorrelationTable) -> Option<BellInequality> {
        let min = self
            .coefficients
            .iter()
            .map(|c| c.abs())
            .filter(|&c| c > 1e-9)
            .fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return None;
        }
        let mut ints = Vec::with_capacity(self.coefficients.len());
        for &c in &self.coefficients {
            let x = c / min;
            let r = x.round();
            if (x - r).abs() > 1e-6 || r.abs() > 1e12 {
                return None;
            }
            ints.push(r as i64);
        }
        let bound = max_abs_over_vertices(&self.layout, |v| {
            ints.iter().zip(v).map(|(&c, &x)| c * x).sum::<i64>() as f64
        });
        let ineq = BellInequality::new(self.layout.clone(), ints, bound as i64).ok()?;
        let value: f64 = ineq
            .coefficients()
            .iter()
            .zip(table.values())
            .map(|(&c, &e)| c as f64 * e)
            .sum();
        (value.abs() > bound).then_some(ineq)
    }

    /// Same schema as a Bell inequality, with real coefficients.
    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "layout": self.layout.settings(),
            "coefficients": json::to_nested(&self.coefficients, self.layout.settings(), |x| serde_json::json!(x)),
            "bound": self.bound,
        })
    }
}

fn max_abs_over_vertices(layout: &ExperimentLayout, f: impl Fn(&[i64]) -> f64) -> f64 {
    let count = 1u64 << layout.vertex_count_log2();
    (0..count)
        .map(|v| f(&DeterministicStrategy::from_vertex_index(layout, v).vertex(layout)).abs())
        .fold(0.0, f64::max)
}

/// Decides whether `table` is a convex combination of deterministic vertices.
///
/// Solves `V lambda = E, sum(lambda) = 1, lambda >= 0` by phase-1 simplex.
/// Inside: the optimal `lambda` as a model. Outside: the phase-1 multipliers
/// `y` satisfy `y_E . v + y_0 <= 0` on every vertex and `y_E . E + y_0 > 0`,
/// which is returned as a separating inequality with coefficients `y_E`.
pub fn polytope_membership(table: &CorrelationTable) -> Result<Membership> {
    let layout = table.layout();
    let log2 = layout.vertex_count_log2();
    if log2 > MAX_VERTEX_LOG2 {
        return Err(Error::SizeLimit(format!(
            "layout {layout} has 2^{log2} vertices, limit is 2^{MAX_VERTEX_LOG2}"
        )));
    }
    let d = layout.dimension();
    let nverts = 1usize << log2;
    let mut b = table.values().to_vec();
    b.push(1.0);
    let column = |j: usize, out: &mut [f64]| {
        let v = DeterministicStrategy::from_vertex_index(layout, j as u64).vertex(layout);
        for (o, x) in out.iter_mut().zip(&v) {
            *o = *x as f64;
        }
        out[d] = 1.0;
    };
    let res = phase_one(&b, nverts, column);

    if res.objective <= FEASIBILITY_TOL {
        let total: f64 = res.primal.iter().map(|&(_, w)| w).sum();
        let mut weights = BTreeMap::new();
        for &(j, w) in &res.primal {
            if w > 0.0 {
                *weights
                    .entry(DeterministicStrategy::from_vertex_index(layout, j as u64))
                    .or_insert(0.0) += w / total;
            }
        }
        let model = LhvModel::new(layout.clone(), weights)?;
        return Ok(Membership::Inside {
            model,
            residual: res.objective,
        });
    }

    let mut coefficients: Vec<f64> = res.dual[..d].to_vec();
    let scale = coefficients.iter().map(|c| c.abs()).fold(0.0, f64::max);
    if scale > 0.0 {
        coefficients.iter_mut().for_each(|c| *c /= scale);
    }
    // Snap round-off so that exact structure (e.g. CHSH signs) survives.
    for c in coefficients.iter_mut() {
        if c.abs() < 1e-12 {
            *c = 0.0;
        }
    }
    let bound = max_abs_over_vertices(layout, |v| coefficients.iter().zip(v).map(|(c, &x)| c * x as f64).sum());
    Ok(Membership::Outside {
        certificate: SeparatingInequality {
            layout: layout.clone(),
            coefficients,
            bound,
        },
        residual: res.objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhvcore::{evaluate_model, general_bell_lhs};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn table(layout: &[usize], values: Vec<f64>) -> CorrelationTable {
        CorrelationTable::new(ExperimentLayout::new(layout.to_vec()).unwrap(), values).unwrap()
    }

    #[test]
    fn barycenter_is_inside() {
        for l in [vec![2, 2], vec![3, 2], vec![2, 2, 2]] {
            let t = CorrelationTable::zeros(ExperimentLayout::new(l).unwrap());
            let m = polytope_membership(&t).unwrap();
            let Membership::Inside { model, .. } = m else {
                panic!("zero table must be inside")
            };
            let back = evaluate_model(&model);
            assert!(back.values().iter().all(|x| x.abs() < 1e-9));
        }
    }

    #[test]
    fn chsh_optimal_is_outside_with_chsh_certificate() {
        let h = FRAC_1_SQRT_2;
        let t = table(&[2, 2], vec![h, h, h, -h]);
        let Membership::Outside { certificate, .. } = polytope_membership(&t).unwrap() else {
            panic!("CHSH-optimal table must be outside")
        };
        let c = certificate.coefficients();
        let r = c[0];
        let want = [1.0, 1.0, 1.0, -1.0];
        for (ci, w) in c.iter().zip(want) {
            assert!((ci - r * w).abs() < 1e-9, "certificate {c:?} not proportional to CHSH");
        }
        assert!((certificate.bound() - 2.0 * r.abs()).abs() < 1e-9);
        assert!(certificate.value(&t).abs() > certificate.bound());
        let int = certificate.to_integer(&t).unwrap();
        assert_eq!(int.bound(), 2);
        assert_eq!(int.coefficients().iter().map(|c| c.abs()).collect::<Vec<_>>(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn deterministic_vertex_is_inside() {
        let l = ExperimentLayout::new(vec![3, 2]).unwrap();
        let s = DeterministicStrategy::from_vertex_index(&l, 13);
        let t = s.table(&l);
        let Membership::Inside { model, .. } = polytope_membership(&t).unwrap() else {
            panic!()
        };
        let back = evaluate_model(&model);
        for (a, b) in back.values().iter().zip(t.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_general_inequality_on_a_grid() {
        // Along (x, x, x, -x) every |W(s)| is 2x, so the boundary sits at x = 1/2.
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let t = table(&[2, 2], vec![x, x, x, -x]);
            let lhs = general_bell_lhs(&t).unwrap();
            if (lhs - 4.0).abs() < 1e-9 {
                continue;
            }
            assert_eq!(polytope_membership(&t).unwrap().is_inside(), lhs <= 4.0, "x = {x}");
        }
    }

    #[test]
    fn size_cap() {
        let t = CorrelationTable::zeros(ExperimentLayout::new(vec![8, 8, 8]).unwrap());
        assert!(matches!(polytope_membership(&t), Err(Error::SizeLimit(_))));
    }
}
