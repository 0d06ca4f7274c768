//! Correlation-function Bell inequalities for multiqubit systems.
//!
//! * [`qstate`]: states, density matrices and correlation tensors.
//! * [`lhvcore`]: correlation tables, the two-setting inequality family,
//!   explicit local hidden-variable models and polytope membership.
//! * [`multiset`]: multisetting inequalities from recursive identities and
//!   exact tightness checks.
//! * [`qcond`]: violation conditions on correlation tensors and see-saw
//!   maximization of quantum values.
//! * [`families`]: named states, the generalized GHZ family and white noise.

pub mod error;
pub mod families;
mod json;
pub mod lhvcore;
pub mod multiset;
pub mod qcond;
pub mod qstate;
mod tensor;

pub use error::{Error, Result};
pub use families::{GhzFamily, StateSpec};
pub use lhvcore::{CorrelationTable, DeterministicStrategy, ExperimentLayout, LhvModel, SignFunction};
pub use multiset::{BellInequality, ConstructionTree};
pub use qcond::{ConditionKind, ConditionReport, OptimizerOptions};
pub use qstate::{CorrelationTensor, DensityMatrix, LocalFrame, PureState, SettingVector};
