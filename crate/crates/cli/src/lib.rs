//! Command implementations behind the `multibell` binary.
//!
//! Each command takes already-read input and returns the text to emit plus
//! the process exit code, so the commands can be tested without a process.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

use multibell_core::families::{ghz_tensor_analytic, GhzFamily, StateSpec};
use multibell_core::lhvcore::{
    construct_lhv_model, general_bell_lhs, maximizing_sign_function, polytope_membership, Membership,
};
use multibell_core::multiset::{
    build_442, build_recursive, check_tightness, doubling_layout, doubling_sign_count, tree_88444, tree_doubling,
    tree_four_by_two,
};
use multibell_core::qcond::{
    condition_multisetting_cn, condition_two_qubit, condition_two_setting_n, maximize_bell_value, VIOLATION_TOL,
};
use multibell_core::{
    BellInequality, ConditionKind, ConditionReport, CorrelationTable, CorrelationTensor, Error, ExperimentLayout,
    OptimizerOptions, SignFunction,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// A command failure, classified by exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Input(String),
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Resource(_) => EXIT_RESOURCE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Resource(m) => write!(f, "resource cap exceeded: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SizeLimit(m) => CliError::Resource(m),
            other => CliError::Input(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Text to write and the exit code to finish with.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub code: i32,
}

impl Output {
    fn json(v: &Value, violated: bool) -> Self {
        let mut text = serde_json::to_string_pretty(v).expect("JSON values always serialize");
        text.push('\n');
        Output {
            text,
            code: if violated { EXIT_VIOLATION } else { EXIT_OK },
        }
    }
}

fn parse_json(text: &str) -> CliResult<Value> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed JSON: {e}")))
}

/// Parses a condition kind by its report name or a short alias.
pub fn parse_kind(s: &str) -> CliResult<ConditionKind> {
    match s {
        "two_setting_NS_2qubit" | "two-qubit" => Ok(ConditionKind::TwoQubit),
        "two_setting_sufficient_N" | "two-setting" => Ok(ConditionKind::TwoSettingN),
        "multisetting_CN" | "cn" => Ok(ConditionKind::MultisettingCn),
        other => Err(CliError::Input(format!(
            "unknown condition kind '{other}' (expected two-qubit, two-setting or cn)"
        ))),
    }
}

fn run_condition(kind: ConditionKind, t: &CorrelationTensor, opts: &OptimizerOptions) -> CliResult<ConditionReport> {
    Ok(match kind {
        ConditionKind::TwoQubit => condition_two_qubit(t)?,
        ConditionKind::TwoSettingN => condition_two_setting_n(t, opts)?,
        ConditionKind::MultisettingCn => condition_multisetting_cn(t, opts)?,
    })
}

/// Where a correlation tensor comes from: a named state or tensor JSON.
#[derive(Debug, Clone)]
pub enum TensorSource {
    Spec(String),
    Json(String),
}

impl TensorSource {
    pub fn load(&self) -> CliResult<CorrelationTensor> {
        match self {
            TensorSource::Spec(s) => Ok(StateSpec::from_str(s)?.tensor()?),
            TensorSource::Json(text) => Ok(CorrelationTensor::from_json(&parse_json(text)?)?),
        }
    }
}

/// `tensor`: correlation tensor of a named state.
pub fn cmd_tensor(spec: &str) -> CliResult<Output> {
    let t = StateSpec::from_str(spec)?.tensor()?;
    Ok(Output::json(&t.to_json(), false))
}

/// `lhv`: a local hidden-variable model for a correlation table, or a
/// certificate that none exists.
pub fn cmd_lhv(table_json: &str) -> CliResult<Output> {
    let table = CorrelationTable::from_json(&parse_json(table_json)?)?;
    let layout = table.layout().clone();
    if layout.is_two_setting() {
        let lhs = general_bell_lhs(&table)?;
        let bound = (1u64 << layout.parties()) as f64;
        return match construct_lhv_model(&table) {
            Ok(model) => Ok(Output::json(
                &json!({"local": true, "general_bell_lhs": lhs, "bound": bound, "model": model.to_json()}),
                false,
            )),
            Err(Error::InequalityViolated { .. }) => {
                let sign = maximizing_sign_function(&table)?;
                Ok(Output::json(
                    &json!({
                        "local": false,
                        "general_bell_lhs": lhs,
                        "bound": bound,
                        "sign_function": sign.to_bitstring(),
                        "certificate": sign.to_inequality().to_json(),
                    }),
                    true,
                ))
            }
            Err(e) => Err(e.into()),
        };
    }
    match polytope_membership(&table)? {
        Membership::Inside { model, residual } => Ok(Output::json(
            &json!({"local": true, "residual": residual, "model": model.to_json()}),
            false,
        )),
        Membership::Outside { certificate, residual } => {
            let integer = certificate.to_integer(&table).map(|i| i.to_json());
            Ok(Output::json(
                &json!({
                    "local": false,
                    "residual": residual,
                    "certificate": certificate.to_json(),
                    "integer_certificate": integer,
                }),
                true,
            ))
        }
    }
}

fn expect_signs(signs: &[SignFunction], count: usize, arities: &[usize], layout: &ExperimentLayout) -> CliResult<()> {
    if signs.len() != count {
        return Err(CliError::Input(format!(
            "layout {layout} needs {count} sign functions, got {}",
            signs.len()
        )));
    }
    for (i, (f, &a)) in signs.iter().zip(arities).enumerate() {
        if f.arity() != a {
            return Err(CliError::Input(format!(
                "sign function {} for layout {layout} must have {} bits, got {}",
                i + 1,
                1usize << a,
                f.bits().len()
            )));
        }
    }
    Ok(())
}

/// Builds the family member for a supported layout:
/// `2x...x2` (one sign function of arity N), `4x...x4x2` (arity 2, N-1, N-1),
/// `2^(N-1) x 2^(N-1) x ... x 2` (`2^(N-1) - 1` of arity 2) and `8x8x4x4x4` (9 of arity 2).
pub fn generate_inequality(layout: &ExperimentLayout, signs: &[SignFunction]) -> CliResult<BellInequality> {
    let m = layout.settings();
    let n = m.len();
    if layout.is_two_setting() {
        expect_signs(signs, 1, &[n], layout)?;
        return Ok(signs[0].to_inequality());
    }
    if n >= 3 && m[..n - 1].iter().all(|&k| k == 4) && m[n - 1] == 2 {
        expect_signs(signs, 3, &[2, n - 1, n - 1], layout)?;
        if n == 3 {
            return Ok(build_442(&signs[0], &signs[1], &signs[2])?);
        }
        return Ok(build_recursive(&tree_four_by_two(n, &signs[0], &signs[1], &signs[2]))?);
    }
    if n >= 3 && m == doubling_layout(n).as_slice() {
        let count = doubling_sign_count(n);
        expect_signs(signs, count, &vec![2; count], layout)?;
        return Ok(build_recursive(&tree_doubling(n, signs)?)?);
    }
    if m == [8, 8, 4, 4, 4] {
        expect_signs(signs, 9, &[2; 9], layout)?;
        return Ok(build_recursive(&tree_88444(signs)?)?);
    }
    Err(CliError::Input(format!(
        "no construction for layout {layout} (supported: 2x..x2, 4x..x4x2, 8x8x4x2-style doubling, 8x8x4x4x4)"
    )))
}

/// `generate`: a family inequality, optionally with its tightness report.
pub fn cmd_generate(layout: &str, sign_fns: &[String], check_tight: bool) -> CliResult<Output> {
    let layout: ExperimentLayout = layout.parse()?;
    let signs = sign_fns
        .iter()
        .map(|s| SignFunction::from_bitstring(s))
        .collect::<Result<Vec<_>, _>>()?;
    let ineq = generate_inequality(&layout, &signs)?;
    if check_tight {
        let report = check_tightness(&ineq)?;
        let v = json!({
            "inequality": ineq.to_json(),
            "tightness": serde_json::to_value(&report).expect("report serializes"),
        });
        return Ok(Output::json(&v, false));
    }
    Ok(Output::json(&ineq.to_json(), false))
}

/// Grid for `scan`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub family: String,
    pub parties: Vec<usize>,
    /// Number of `alpha` values, evenly spaced over `[0, pi/4]`.
    pub steps: usize,
    pub kinds: Vec<ConditionKind>,
}

impl ScanSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.family != "ghz" {
            return Err(CliError::Input(format!("unknown scan family '{}' (expected ghz)", self.family)));
        }
        if self.parties.is_empty() || self.kinds.is_empty() {
            return Err(CliError::Input("scan grid is empty".into()));
        }
        if self.steps < 2 {
            return Err(CliError::Input(format!("scan needs at least 2 alpha steps, got {}", self.steps)));
        }
        if self.kinds.contains(&ConditionKind::TwoQubit) && self.parties.iter().any(|&n| n != 2) {
            return Err(CliError::Input("the two-qubit condition only applies to N = 2".into()));
        }
        Ok(())
    }

    pub fn alphas(&self) -> Vec<f64> {
        (0..self.steps)
            .map(|i| FRAC_PI_4 * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

/// `scan`: CSV of condition values over a GHZ-family grid.
pub fn cmd_scan(spec: &ScanSpec, opts: &OptimizerOptions) -> CliResult<Output> {
    spec.validate()?;
    opts.validate()?;
    let mut text = String::from("family,N,alpha,kind,value,violated\n");
    for &n in &spec.parties {
        for alpha in spec.alphas() {
            let t = ghz_tensor_analytic(&GhzFamily::new(n, alpha)?);
            for &kind in &spec.kinds {
                let r = run_condition(kind, &t, opts)?;
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    spec.family,
                    n,
                    alpha,
                    kind.as_str(),
                    r.value,
                    r.violated
                ));
            }
        }
    }
    Ok(Output { text, code: EXIT_OK })
}

/// Kinds evaluated when none are requested.
pub fn default_kinds(n: usize) -> Vec<ConditionKind> {
    let mut k = Vec::new();
    if n == 2 {
        k.push(ConditionKind::TwoQubit);
    }
    k.push(ConditionKind::TwoSettingN);
    k.push(ConditionKind::MultisettingCn);
    k
}

/// `condition`: violation-condition reports for one state.
pub fn cmd_condition(source: &TensorSource, kinds: &[ConditionKind], opts: &OptimizerOptions) -> CliResult<Output> {
    opts.validate()?;
    let t = source.load()?;
    let kinds = if kinds.is_empty() {
        default_kinds(t.n_qubits())
    } else {
        kinds.to_vec()
    };
    let reports = kinds
        .iter()
        .map(|&k| run_condition(k, &t, opts))
        .collect::<CliResult<Vec<_>>>()?;
    let violated = reports.iter().any(|r| r.violated);
    let v = json!({
        "n_qubits": t.n_qubits(),
        "violated": violated,
        "reports": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
    });
    Ok(Output::json(&v, violated))
}

/// Reads a Bell inequality, bare or wrapped as `generate --check-tight` emits it.
pub fn parse_inequality(text: &str) -> CliResult<BellInequality> {
    let v = parse_json(text)?;
    let inner = match v.get("inequality") {
        Some(i) if v.get("tightness").is_some() => i.clone(),
        _ => v,
    };
    Ok(BellInequality::from_json(&inner)?)
}

/// `maximize`: best quantum value of an inequality on a state.
pub fn cmd_maximize(source: &TensorSource, inequality: &str, opts: &OptimizerOptions) -> CliResult<Output> {
    opts.validate()?;
    let t = source.load()?;
    let ineq = parse_inequality(inequality)?;
    let r = maximize_bell_value(&t, &ineq, opts)?;
    let violated = r.value > ineq.bound() as f64 + VIOLATION_TOL;
    let settings: Vec<Vec<[f64; 3]>> = r
        .settings
        .iter()
        .map(|vs| vs.iter().map(|v| v.components()).collect())
        .collect();
    let v = json!({
        "value": r.value,
        "bound": ineq.bound(),
        "violated": violated,
        "settings": settings,
        "converged": r.converged,
        "degenerate_updates": r.degenerate_updates,
        "seed": opts.seed,
        "restarts": opts.restarts,
    });
    Ok(Output::json(&v, violated))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> OptimizerOptions {
        OptimizerOptions {
            restarts: 5,
            ..Default::default()
        }
    }

    #[test]
    fn kinds_parse_by_name_and_alias() {
        assert_eq!(parse_kind("cn").unwrap(), ConditionKind::MultisettingCn);
        assert_eq!(parse_kind("two_setting_sufficient_N").unwrap(), ConditionKind::TwoSettingN);
        assert_eq!(parse_kind("two-qubit").unwrap(), ConditionKind::TwoQubit);
        assert!(parse_kind("mermin").is_err());
    }

    #[test]
    fn error_classes() {
        assert_eq!(CliError::from(Error::SizeLimit("x".into())).exit_code(), EXIT_RESOURCE);
        assert_eq!(CliError::from(Error::InvalidLayout("x".into())).exit_code(), EXIT_INPUT);
    }

    #[test]
    fn generate_rejects_wrong_arity() {
        let layout: ExperimentLayout = "4x4x2".parse().unwrap();
        let s = SignFunction::chsh();
        assert!(generate_inequality(&layout, &[s.clone(), s.clone()]).is_err());
        let three = SignFunction::from_index(3, 1).unwrap();
        assert!(generate_inequality(&layout, &[s.clone(), s.clone(), three]).is_err());
        assert_eq!(generate_inequality(&layout, &[s.clone(), s.clone(), s]).unwrap().bound(), 16);
    }

    #[test]
    fn unsupported_layout() {
        let layout: ExperimentLayout = "3x2".parse().unwrap();
        assert!(matches!(generate_inequality(&layout, &[]), Err(CliError::Input(_))));
    }

    #[test]
    fn scan_grid_validation() {
        let mut spec = ScanSpec {
            family: "ghz".into(),
            parties: vec![3],
            steps: 1,
            kinds: vec![ConditionKind::TwoSettingN],
        };
        assert!(cmd_scan(&spec, &opts()).is_err());
        spec.steps = 3;
        assert_eq!(spec.alphas(), vec![0.0, FRAC_PI_4 / 2.0, FRAC_PI_4]);
        spec.kinds = vec![ConditionKind::TwoQubit];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn wrapped_inequality_is_accepted() {
        let out = cmd_generate("2x2", &["0001".into()], true).unwrap();
        assert_eq!(parse_inequality(&out.text).unwrap().bound(), 4);
    }
}
