//! Named states, the generalized GHZ family with its closed-form tensor, and
//! white-noise mixing.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::qstate::{correlation_tensor, density_from_pure, CorrelationTensor, DensityMatrix, PureState, C64, MAX_QUBITS};

/// Slack above `pi/4` accepted for `alpha`, so that rounded inputs such as
/// `0.7854` are not rejected.
pub const ALPHA_SLACK: f64 = 1e-4;

/// `cos(alpha) |0...0> + sin(alpha) |1...1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhzFamily {
    n_qubits: usize,
    alpha: f64,
}

impl GhzFamily {
    pub fn new(n_qubits: usize, alpha: f64) -> Result<Self> {
        if !(2..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::InvalidParameter(format!(
                "GHZ family needs 2 <= N <= {MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if !(alpha.is_finite() && (0.0..=FRAC_PI_4 + ALPHA_SLACK).contains(&alpha)) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} outside [0, pi/4]")));
        }
        Ok(GhzFamily { n_qubits, alpha })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// `(|01> - |10>) / sqrt(2)`.
pub fn singlet() -> PureState {
    let z = C64::new(0.0, 0.0);
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    PureState::new(2, vec![z, h, -h, z]).expect("normalized")
}

pub fn ghz_state(f: &GhzFamily) -> PureState {
    let dim = 1usize << f.n_qubits;
    let mut a = vec![C64::new(0.0, 0.0); dim];
    a[0] = C64::new(f.alpha.cos(), 0.0);
    a[dim - 1] = C64::new(f.alpha.sin(), 0.0);
    PureState::normalized(f.n_qubits, a).expect("nonzero amplitudes")
}

/// Closed-form Pauli components of the generalized GHZ state.
///
/// * Indices only from `{0, z}`: `1` for an even number of `z`, `cos(2 alpha)` for odd.
/// * Indices only from `{x, y}` with `2k` of them `y`: `(-1)^k sin(2 alpha)`;
///   an odd number of `y` gives zero.
/// * Everything else vanishes.
pub fn ghz_tensor_analytic(f: &GhzFamily) -> CorrelationTensor {
    let n = f.n_qubits;
    let (c, s) = ((2.0 * f.alpha).cos(), (2.0 * f.alpha).sin());
    let mut comps = vec![0.0; 1 << (2 * n)];
    for (flat, slot) in comps.iter_mut().enumerate() {
        let digits: Vec<usize> = (0..n).map(|j| (flat >> (2 * (n - 1 - j))) & 3).collect();
        if digits.iter().all(|&d| d == 0 || d == 3) {
            let zs = digits.iter().filter(|&&d| d == 3).count();
            *slot = if zs % 2 == 0 { 1.0 } else { c };
        } else if digits.iter().all(|&d| d == 1 || d == 2) {
            let ys = digits.iter().filter(|&&d| d == 2).count();
            if ys % 2 == 0 {
                *slot = if (ys / 2) % 2 == 0 { s } else { -s };
            }
        }
    }
    CorrelationTensor::new(n, comps).expect("components within [-1, 1]")
}

/// `1 / sqrt(2^(N-1))`: for odd `N`, GHZ states with `sin(2 alpha)` at or
/// below this value violate no two-setting correlation inequality.
pub fn scarani_gisin_threshold(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("threshold needs N >= 2, got {n}")));
    }
    Ok(1.0 / 2f64.powf((n as f64 - 1.0) / 2.0))
}

fn check_visibility(v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("visibility {v} outside [0, 1]")));
    }
    Ok(())
}

/// `v rho + (1 - v) I / 2^N`.
pub fn mix_with_white_noise(rho: &DensityMatrix, v: f64) -> Result<DensityMatrix> {
    check_visibility(v)?;
    rho.convex_mix(&DensityMatrix::maximally_mixed(rho.n_qubits())?, v)
}

/// Tensor of `v rho + (1 - v) I / 2^N`: every component except the identity
/// one is scaled by `v`.
pub fn mix_tensor_with_white_noise(t: &CorrelationTensor, v: f64) -> Result<CorrelationTensor> {
    check_visibility(v)?;
    let mut comps: Vec<f64> = t.full_components().iter().map(|x| x * v).collect();
    comps[0] = 1.0;
    CorrelationTensor::new(t.n_qubits(), comps)
}

/// Textual state description accepted by the command line:
/// `singlet`, `ghz:N=3,alpha=0.3`, `noise:v=0.8(<inner spec>)`.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Singlet,
    Ghz(GhzFamily),
    Noise { visibility: f64, inner: Box<StateSpec> },
}

impl StateSpec {
    pub fn n_qubits(&self) -> usize {
        match self {
            StateSpec::Singlet => 2,
            StateSpec::Ghz(f) => f.n_qubits,
            StateSpec::Noise { inner, .. } => inner.n_qubits(),
        }
    }

    pub fn density(&self) -> Result<DensityMatrix> {
        match self {
            StateSpec::Singlet => Ok(density_from_pure(&singlet())),
            StateSpec::Ghz(f) => Ok(density_from_pure(&ghz_state(f))),
            StateSpec::Noise { visibility, inner } => mix_with_white_noise(&inner.density()?, *visibility),
        }
    }

    /// Correlation tensor computed from the density matrix.
    pub fn tensor(&self) -> Result<CorrelationTensor> {
        match self {
            StateSpec::Noise { visibility, inner } => mix_tensor_with_white_noise(&inner.tensor()?, *visibility),
            _ => correlation_tensor(&self.density()?),
        }
    }
}

fn spec_error(s: &str, why: &str) -> Error {
    Error::InvalidState(format!("cannot parse state spec `{s}`: {why}"))
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "singlet" {
            return Ok(StateSpec::Singlet);
        }
        let (name, rest) = t.split_once(':').ok_or_else(|| spec_error(s, "unknown state"))?;
        match name.trim() {
            "ghz" => {
                let (mut n, mut alpha) = (None, None);
                for kv in rest.split(',') {
                    let (k, v) = kv.split_once('=').ok_or_else(|| spec_error(s, "expected key=value"))?;
                    match k.trim() {
                        "N" | "n" => n = Some(v.trim().parse::<usize>().map_err(|e| spec_error(s, &e.to_string()))?),
                        "alpha" => alpha = Some(v.trim().parse::<f64>().map_err(|e| spec_error(s, &e.to_string()))?),
                        other => return Err(spec_error(s, &format!("unknown key `{other}`"))),
                    }
                }
                let n = n.ok_or_else(|| spec_error(s, "missing N"))?;
                let alpha = alpha.ok_or_else(|| spec_error(s, "missing alpha"))?;
                Ok(StateSpec::Ghz(GhzFamily::new(n, alpha)?))
            }
            "noise" => {
                let open = rest.find('(').ok_or_else(|| spec_error(s, "expected v=<visibility>(<state>)"))?;
                if !rest.ends_with(')') {
                    return Err(spec_error(s, "missing closing parenthesis"));
                }
                let (k, v) = rest[..open]
                    .split_once('=')
                    .ok_or_else(|| spec_error(s, "expected v=<visibility>"))?;
                if k.trim() != "v" {
                    return Err(spec_error(s, &format!("unknown key `{}`", k.trim())));
                }
                let visibility = v.trim().parse::<f64>().map_err(|e| spec_error(s, &e.to_string()))?;
                check_visibility(visibility)?;
                let inner: StateSpec = rest[open + 1..rest.len() - 1].parse()?;
                Ok(StateSpec::Noise {
                    visibility,
                    inner: Box::new(inner),
                })
            }
            _ => Err(spec_error(s, "unknown state")),
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Singlet => write!(f, "singlet"),
            StateSpec::Ghz(g) => write!(f, "ghz:N={},alpha={}", g.n_qubits, g.alpha),
            StateSpec::Noise { visibility, inner } => write!(f, "noise:v={visibility}({inner})"),
        }
    }
}
