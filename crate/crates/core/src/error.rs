use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid correlation tensor: {0}")]
    InvalidTensor(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("setting vector is not a unit vector (norm {0})")]
    NonUnitVector(f64),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("invalid correlation table: {0}")]
    InvalidTable(String),

    #[error("sign function arity {actual} does not match {expected} parties")]
    ArityMismatch { expected: usize, actual: usize },

    #[error("invalid sign function: {0}")]
    InvalidSignFunction(String),

    #[error("enumeration of sign functions for N = {0} is not supported (N <= 4)")]
    EnumerationTooLarge(usize),

    #[error("general Bell inequality violated: lhs {lhs} exceeds bound {bound}")]
    InequalityViolated { lhs: f64, bound: f64 },

    #[error("resource cap exceeded: {0}")]
    SizeLimit(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("malformed construction tree: {0}")]
    MalformedTree(String),

    #[error("invalid setting map: {0}")]
    InvalidSettingMap(String),

    #[error("invalid inequality: {0}")]
    InvalidInequality(String),

    #[error("wrong number of qubits: {0}")]
    WrongQubitCount(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integer overflow during exact rank computation")]
    RankOverflow,

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
