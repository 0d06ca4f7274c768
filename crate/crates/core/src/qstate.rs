//! N-qubit states, Pauli decomposition and quantum correlation functions.
//!
//! Qubit `j` (party `j + 1`) is the `j`-th most significant bit of a
//! computational-basis index, so `|q_1 q_2 ... q_N>` has index
//! `sum_j q_j 2^(N-1-j)`. Pauli indices are `0 = identity, 1 = x, 2 = y, 3 = z`
//! with the standard matrix forms.

use nalgebra::{Complex, DMatrix, Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::json;
use crate::tensor;

pub type C64 = Complex<f64>;

/// Largest register handled with dense `4^N` tensors.
pub const MAX_QUBITS: usize = 10;

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const RANGE_TOL: f64 = 1e-9;
const ORTHO_TOL: f64 = 1e-10;

fn check_qubits(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::WrongQubitCount(format!(
            "n_qubits = {n_qubits}, supported range is 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PureStateRepr", into = "PureStateRepr")]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PureStateRepr {
    n_qubits: usize,
    amplitudes: Vec<[f64; 2]>,
}

impl TryFrom<PureStateRepr> for PureState {
    type Error = Error;

    fn try_from(r: PureStateRepr) -> Result<Self> {
        let amps = r.amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
        PureState::new(r.n_qubits, amps)
    }
}

impl From<PureState> for PureStateRepr {
    fn from(s: PureState) -> Self {
        PureStateRepr {
            n_qubits: s.n_qubits,
            amplitudes: s.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
        }
    }
}

impl PureState {
    pub fn new(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm2.is_finite() || (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm2} is not 1")));
        }
        Ok(PureState { n_qubits, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm before validating.
    pub fn normalized(n_qubits: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        PureState::new(n_qubits, amplitudes)
    }

    /// Computational basis state with the given index.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        *amps
            .get_mut(index)
            .ok_or_else(|| Error::InvalidState(format!("basis index {index} out of range")))? = C64::new(1.0, 0.0);
        PureState::new(n_qubits, amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(n_qubits: usize, entries: DMatrix<C64>) -> Result<Self> {
        let rho = Self::checked_shape(n_qubits, entries)?;
        let eig = SymmetricEigen::new(rho.entries.clone());
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min}")));
        }
        Ok(rho)
    }

    /// Shape, hermiticity and trace checks only. Used for matrices that are
    /// positive by construction.
    fn checked_shape(n_qubits: usize, entries: DMatrix<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: entries.nrows().max(entries.ncols()),
            });
        }
        for i in 0..dim {
            for j in i..dim {
                if (entries[(i, j)] - entries[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(Error::InvalidDensityMatrix(format!("not Hermitian at ({i}, {j})")));
                }
            }
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} is not 1")));
        }
        Ok(DensityMatrix { n_qubits, entries })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let m = DMatrix::from_diagonal_element(dim, dim, C64::new(1.0 / dim as f64, 0.0));
        Self::checked_shape(n_qubits, m)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    /// `weight * self + (1 - weight) * other`; both must be valid states.
    pub(crate) fn convex_mix(&self, other: &DensityMatrix, weight: f64) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: other.n_qubits,
            });
        }
        let m = self.entries.map(|z| z * weight) + other.entries.map(|z| z * (1.0 - weight));
        Self::checked_shape(self.n_qubits, m)
    }
}

pub fn density_from_pure(state: &PureState) -> DensityMatrix {
    let dim = state.amplitudes.len();
    let a = &state.amplitudes;
    let m = DMatrix::from_fn(dim, dim, |i, j| a[i] * a[j].conj());
    DensityMatrix {
        n_qubits: state.n_qubits,
        entries: m,
    }
}

/// Real tensor of Pauli expectation values `T_{k1..kN} = Tr(rho s_k1 x ... x s_kN)`,
/// stored densely over `{0,1,2,3}^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTensor {
    n_qubits: usize,
    full_components: Vec<f64>,
}

impl CorrelationTensor {
    pub fn new(n_qubits: usize, full_components: Vec<f64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let len = 1usize << (2 * n_qubits);
        if full_components.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                actual: full_components.len(),
            });
        }
        if (full_components[0] - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidTensor(format!(
                "identity component is {}, expected 1",
                full_components[0]
            )));
        }
        if let Some(bad) = full_components
            .iter()
            .find(|x| !x.is_finite() || x.abs() > 1.0 + RANGE_TOL)
        {
            return Err(Error::InvalidTensor(format!("component {bad} outside [-1, 1]")));
        }
        Ok(CorrelationTensor {
            n_qubits,
            full_components,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn full_components(&self) -> &[f64] {
        &self.full_components
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![4; self.n_qubits]
    }

    /// Component at Pauli indices `idx` (each in `0..4`).
    pub fn component(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.n_qubits);
        let flat = idx.iter().fold(0usize, |acc, &k| {
            assert!(k < 4);
            acc * 4 + k
        });
        self.full_components[flat]
    }

    /// The `3^N` block with every index in `{x, y, z}`, party-1-major.
    pub fn correlation_part(&self) -> Vec<f64> {
        let mut cur = self.full_components.clone();
        let mut dims = self.dims();
        let drop_identity = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        for axis in 0..self.n_qubits {
            cur = tensor::apply_map(&cur, &dims, axis, &drop_identity, 3);
            dims[axis] = 3;
        }
        cur
    }

    /// Re-expresses the tensor in rotated local coordinates:
    /// `T'_{..k..} = sum_i R_{k i} T_{..i..}` on the `{x,y,z}` block of each party.
    pub fn rotate_locally(&self, rotations: &[Matrix3<f64>]) -> Result<CorrelationTensor> {
        if rotations.len() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: rotations.len(),
            });
        }
        let mut cur = self.full_components.clone();
        let dims = self.dims();
        for (axis, r) in rotations.iter().enumerate() {
            let mut map = [0.0; 16];
            map[0] = 1.0;
            for k in 0..3 {
                for i in 0..3 {
                    map[(k + 1) * 4 + i + 1] = r[(k, i)];
                }
            }
            cur = tensor::apply_map(&cur, &dims, axis, &map, 4);
        }
        CorrelationTensor::new(self.n_qubits, cur)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "n_qubits": self.n_qubits,
            "full_components": json::to_nested(&self.full_components, &self.dims(), |x| serde_json::json!(x)),
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Json("tensor must be a JSON object".into()))?;
        if let Some(k) = obj.keys().find(|k| *k != "n_qubits" && *k != "full_components") {
            return Err(Error::Json(format!("unknown field `{k}`")));
        }
        let n = obj
            .get("n_qubits")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Json("missing integer field `n_qubits`".into()))? as usize;
        check_qubits(n)?;
        let comps = obj
            .get("full_components")
            .ok_or_else(|| Error::Json("missing field `full_components`".into()))?;
        let flat = json::from_nested(comps, &vec![4; n], Value::as_f64)?;
        CorrelationTensor::new(n, flat)
    }
}

// M[k][2b + c] = sigma_k[c][b], so that contracting the (row, column) bit pair
// of rho with it yields Tr(rho sigma_k) per qubit.
fn pauli_trace_map() -> [C64; 16] {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let sigma: [[[C64; 2]; 2]; 4] = [
        [[one, z], [z, one]],
        [[z, one], [one, z]],
        [[z, -i], [i, z]],
        [[one, z], [z, -one]],
    ];
    let mut m = [z; 16];
    for k in 0..4 {
        for b in 0..2 {
            for c in 0..2 {
                m[k * 4 + 2 * b + c] = sigma[k][c][b];
            }
        }
    }
    m
}

pub fn correlation_tensor(rho: &DensityMatrix) -> Result<CorrelationTensor> {
    let n = rho.n_qubits;
    let dim = 1usize << n;
    if rho.entries.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: rho.entries.nrows(),
        });
    }
    // Interleave row and column bits so that qubit j owns the pair (b_j, c_j).
    let mut x = vec![C64::new(0.0, 0.0); dim * dim];
    for row in 0..dim {
        for col in 0..dim {
            let mut idx = 0usize;
            for j in 0..n {
                let shift = n - 1 - j;
                let b = (row >> shift) & 1;
                let c = (col >> shift) & 1;
                idx = idx * 4 + 2 * b + c;
            }
            x[idx] = rho.entries[(row, col)];
        }
    }
    let map = pauli_trace_map();
    let dims = vec![4; n];
    for axis in 0..n {
        x = tensor::apply_map(&x, &dims, axis, &map, 4);
    }
    let mut comps: Vec<f64> = x.iter().map(|z| z.re).collect();
    // Exact by construction; strip rounding so the invariant holds bit-for-bit.
    comps[0] = 1.0;
    CorrelationTensor::new(n, comps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct SettingVector([f64; 3]);

impl TryFrom<[f64; 3]> for SettingVector {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        SettingVector::new(v)
    }
}

impl From<SettingVector> for [f64; 3] {
    fn from(v: SettingVector) -> Self {
        v.0
    }
}

impl SettingVector {
    pub const X: SettingVector = SettingVector([1.0, 0.0, 0.0]);
    pub const Y: SettingVector = SettingVector([0.0, 1.0, 0.0]);
    pub const Z: SettingVector = SettingVector([0.0, 0.0, 1.0]);

    pub fn new(v: [f64; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NonUnitVector(norm));
        }
        Ok(SettingVector(v))
    }

    /// Scales a nonzero vector to unit length.
    pub fn normalized(v: [f64; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NonUnitVector(norm));
        }
        SettingVector::new([v[0] / norm, v[1] / norm, v[2] / norm])
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn as_vector3(&self) -> Vector3<f64> {
        Vector3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn dot(&self, other: &SettingVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn negated(&self) -> SettingVector {
        SettingVector([-self.0[0], -self.0[1], -self.0[2]])
    }
}

/// Two orthonormal axes spanning a party's measurement plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[SettingVector; 2]", into = "[SettingVector; 2]")]
pub struct LocalFrame {
    axis1: SettingVector,
    axis2: SettingVector,
}

impl TryFrom<[SettingVector; 2]> for LocalFrame {
    type Error = Error;

    fn try_from([a, b]: [SettingVector; 2]) -> Result<Self> {
        LocalFrame::new(a, b)
    }
}

impl From<LocalFrame> for [SettingVector; 2] {
    fn from(f: LocalFrame) -> Self {
        [f.axis1, f.axis2]
    }
}

impl LocalFrame {
    pub fn new(axis1: SettingVector, axis2: SettingVector) -> Result<Self> {
        let d = axis1.dot(&axis2);
        if d.abs() > ORTHO_TOL {
            return Err(Error::InvalidParameter(format!("frame axes not orthogonal (dot {d})")));
        }
        Ok(LocalFrame { axis1, axis2 })
    }

    /// Gram-Schmidt on two arbitrary vectors; the first direction is kept.
    pub fn orthonormalized(a: Vector3<f64>, b: Vector3<f64>) -> Result<Self> {
        let a = a.try_normalize(1e-300).ok_or(Error::NonUnitVector(0.0))?;
        let b = (b - a * a.dot(&b))
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidParameter("frame axes are parallel".into()))?;
        LocalFrame::new(
            SettingVector::normalized([a.x, a.y, a.z])?,
            SettingVector::normalized([b.x, b.y, b.z])?,
        )
    }

    pub fn axis1(&self) -> SettingVector {
        self.axis1
    }

    pub fn axis2(&self) -> SettingVector {
        self.axis2
    }

    pub fn axes(&self) -> [SettingVector; 2] {
        [self.axis1, self.axis2]
    }
}

/// `(a_1 x ... x a_N) . T` over the `{x,y,z}` indices.
pub fn quantum_correlation(t: &CorrelationTensor, settings: &[SettingVector]) -> Result<f64> {
    if settings.len() != t.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: t.n_qubits,
            actual: settings.len(),
        });
    }
    // Re-check in case a caller built vectors through deserialization paths.
    for s in settings {
        SettingVector::new(s.0)?;
    }
    let padded: Vec<[f64; 4]> = settings.iter().map(|s| [0.0, s.0[0], s.0[1], s.0[2]]).collect();
    let refs: Vec<&[f64]> = padded.iter().map(|p| &p[..]).collect();
    Ok(tensor::contract_all(&t.full_components, &t.dims(), &refs))
}
