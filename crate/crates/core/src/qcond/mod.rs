//! Violation conditions on correlation tensors and numerical maximization of
//! Bell expressions over measurement settings.
//!
//! Every routine works on the `3^N` block of the tensor (indices `x, y, z`).
//! A measurement plane for a party is a pair of orthonormal axes; sums of
//! squared components "in the planes" contract each party's index with both
//! axes.

mod planes;
mod seesaw;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::qstate::{CorrelationTensor, LocalFrame, SettingVector};

pub use planes::{cn_objective, FrameTree};
pub use seesaw::{maximize_bell_value, BellValue};

/// A value strictly above `1 + VIOLATION_TOL` counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Restart count, sweep cap, convergence threshold and seed of the
/// alternating optimizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub restarts: usize,
    pub max_sweeps: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            restarts: 50,
            max_sweeps: 500,
            tolerance: 1e-10,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    pub fn with_seed(seed: u64) -> Self {
        OptimizerOptions {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("at least one restart is required".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidParameter("at least one sweep is required".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {} is not >= 0", self.tolerance)));
        }
        Ok(())
    }

    /// Independent stream for restart `r`.
    pub(crate) fn rng(&self, restart: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(restart as u64);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionKind {
    #[serde(rename = "two_setting_NS_2qubit")]
    TwoQubit,
    #[serde(rename = "two_setting_sufficient_N")]
    TwoSettingN,
    #[serde(rename = "multisetting_CN")]
    MultisettingCn,
}

impl ConditionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConditionKind::TwoQubit => "two_setting_NS_2qubit",
            ConditionKind::TwoSettingN => "two_setting_sufficient_N",
            ConditionKind::MultisettingCn => "multisetting_CN",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    /// Closed form, no search involved.
    Exact,
    /// Best value found by a local search; the true maximum is at least this.
    LowerBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub kind: ConditionKind,
    pub value: f64,
    pub violated: bool,
    /// One plane per party. For the multisetting condition this is the
    /// branch that takes the first axis at every level.
    pub frames: Vec<LocalFrame>,
    pub certified: Certification,
    pub seed: u64,
    /// Whether the best restart stopped on the convergence threshold.
    pub converged: bool,
    /// All planes of the multisetting condition.
    pub frame_tree: Option<FrameTree>,
}

impl ConditionReport {
    pub fn to_json(&self) -> Value {
        let mut v = serde_json::json!({
            "kind": self.kind,
            "value": self.value,
            "violated": self.violated,
            "frames": self.frames,
            "certified": self.certified,
            "seed": self.seed,
            "converged": self.converged,
        });
        if let Some(tree) = &self.frame_tree {
            v["frame_tree"] = tree.to_json();
        }
        v
    }
}

pub(crate) fn is_violation(value: f64) -> bool {
    value > 1.0 + VIOLATION_TOL
}

pub(crate) fn require_parties(t: &CorrelationTensor, pred: impl Fn(usize) -> bool, what: &str) -> Result<()> {
    if pred(t.n_qubits()) {
        Ok(())
    } else {
        Err(Error::WrongQubitCount(format!("{what}, got N = {}", t.n_qubits())))
    }
}

/// `3 x 3` correlation block of a two-party tensor, row = party 1.
pub(crate) fn matrix_of(block: &[f64]) -> Matrix3<f64> {
    Matrix3::from_row_slice(block)
}

pub(crate) type Plane = [Vector3<f64>; 2];

pub(crate) fn plane_to_frame(p: &Plane) -> LocalFrame {
    LocalFrame::orthonormalized(p[0], p[1]).expect("optimizer planes are orthonormal")
}

pub(crate) fn frame_to_plane(f: &LocalFrame) -> Plane {
    [f.axis1().as_vector3(), f.axis2().as_vector3()]
}

/// Eigenvectors of a symmetric `3 x 3` matrix, largest eigenvalue first.
pub(crate) fn sorted_eigen(g: &Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let e = g.symmetric_eigen();
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let vals = idx.map(|i| e.eigenvalues[i]);
    let vecs = idx.map(|i| e.eigenvectors.column(i).into_owned());
    (vals, vecs)
}

/// Best pair of in-plane axes for a `3 x 3` block: the top two singular
/// directions on each side, and the sum of the two largest eigenvalues of
/// `M^T M`.
pub(crate) fn best_two_party_planes(m: &Matrix3<f64>) -> (f64, Plane, Plane) {
    let mtm = m.transpose() * m;
    let (vals, right) = sorted_eigen(&mtm);
    let value = vals[0].max(0.0) + vals[1].max(0.0);
    // Left directions: M v / |M v|, completed to an orthonormal pair when
    // a singular value vanishes.
    let mut left = [Vector3::zeros(); 2];
    for k in 0..2 {
        let u = m * right[k];
        left[k] = u.try_normalize(1e-12).unwrap_or_else(Vector3::zeros);
    }
    let left = complete_pair(left);
    (value, left, [right[0], right[1]])
}

/// Fills in zero vectors so that the pair is orthonormal.
fn complete_pair(mut p: Plane) -> Plane {
    if p[0] == Vector3::zeros() {
        p[0] = if p[1] == Vector3::zeros() {
            Vector3::x()
        } else {
            any_orthogonal(&p[1])
        };
    }
    if p[1] == Vector3::zeros() {
        p[1] = any_orthogonal(&p[0]);
    }
    // Gram-Schmidt against round-off.
    p[1] = (p[1] - p[0] * p[0].dot(&p[1])).normalize();
    p
}

pub(crate) fn any_orthogonal(v: &Vector3<f64>) -> Vector3<f64> {
    let e = if v.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    (e - v * v.dot(&e)).normalize()
}

pub(crate) fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub(crate) fn random_plane(rng: &mut impl Rng) -> Plane {
    let a = random_unit(rng);
    let mut b = random_unit(rng);
    while a.cross(&b).norm() < 1e-3 {
        b = random_unit(rng);
    }
    [a, (b - a * a.dot(&b)).normalize()]
}

/// Necessary and sufficient two-qubit condition: the maximum over local
/// frames of `sum_{k,l in {1,2}} T_kl^2`, which equals the sum of the two
/// largest eigenvalues of `M^T M`.
pub fn condition_two_qubit(t: &CorrelationTensor) -> Result<ConditionReport> {
    require_parties(t, |n| n == 2, "the two-qubit condition needs N = 2")?;
    let m = matrix_of(&t.correlation_part());
    let (value, p1, p2) = best_two_party_planes(&m);
    Ok(ConditionReport {
        kind: ConditionKind::TwoQubit,
        value,
        violated: is_violation(value),
        frames: vec![plane_to_frame(&p1), plane_to_frame(&p2)],
        certified: Certification::Exact,
        seed: 0,
        converged: true,
        frame_tree: None,
    })
}

/// Maximum over local planes of the sum of the `2^N` squared in-plane
/// components. A value above 1 is sufficient for a violation of some member
/// of the two-setting family.
pub fn condition_two_setting_n(t: &CorrelationTensor, opts: &OptimizerOptions) -> Result<ConditionReport> {
    require_parties(t, |n| n >= 2, "the two-setting condition needs N >= 2")?;
    opts.validate()?;
    let run = planes::optimize_shared_planes(t, opts);
    Ok(ConditionReport {
        kind: ConditionKind::TwoSettingN,
        value: run.value,
        violated: is_violation(run.value),
        frames: run.planes.iter().map(plane_to_frame).collect(),
        certified: Certification::LowerBound,
        seed: opts.seed,
        converged: run.converged,
        frame_tree: None,
    })
}

/// The multisetting condition `C_N`, built by the recurrence
/// `C_N = max over party N's plane of C_{N-1}(T a_1) + C_{N-1}(T a_2)`, with
/// independent planes inside each branch and the closed-form two-qubit
/// maximum at the bottom.
pub fn condition_multisetting_cn(t: &CorrelationTensor, opts: &OptimizerOptions) -> Result<ConditionReport> {
    require_parties(t, |n| n >= 2, "the multisetting condition needs N >= 2")?;
    opts.validate()?;
    if t.n_qubits() == 2 {
        let mut r = condition_two_qubit(t)?;
        r.kind = ConditionKind::MultisettingCn;
        r.seed = opts.seed;
        r.frame_tree = Some(FrameTree::broadcast(&[frame_to_plane(&r.frames[0]), frame_to_plane(&r.frames[1])]));
        return Ok(r);
    }
    let shared = planes::optimize_shared_planes(t, opts);
    let run = planes::optimize_frame_tree(t, opts, &shared.planes);
    Ok(ConditionReport {
        kind: ConditionKind::MultisettingCn,
        value: run.value,
        violated: is_violation(run.value),
        frames: run.tree.first_branch().iter().map(plane_to_frame).collect(),
        certified: Certification::LowerBound,
        seed: opts.seed,
        converged: run.converged,
        frame_tree: Some(run.tree),
    })
}

/// Setting vectors from a plane: `cos(t) axis1 + sin(t) axis2`.
pub fn in_plane_setting(frame: &LocalFrame, angle: f64) -> SettingVector {
    let v = frame.axis1().as_vector3() * angle.cos() + frame.axis2().as_vector3() * angle.sin();
    SettingVector::normalized([v.x, v.y, v.z]).expect("unit combination of orthonormal axes")
}
