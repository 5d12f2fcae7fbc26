use thiserror::Error;

use crate::kernel::Sort;

/// Errors raised anywhere in the workbench.
///
/// Values are `Clone` because lazily forced denotation nodes cache their
/// outcome, failures included.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operator `{op}` expects {expected} arguments, got {found}")]
    ArityMismatch {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("sort mismatch in {context}: expected {expected}, found {found}")]
    SortMismatch {
        context: String,
        expected: Sort,
        found: Sort,
    },
    #[error("unbound metavariable `{0}`")]
    UnboundMetavariable(String),
    #[error("no rule applies to `{0}`")]
    NoRuleApplies(String),
    #[error("law is not relatively flat: {0}")]
    FlatnessViolation(String),
    #[error("malformed distribution: {0}")]
    MalformedDistribution(String),
    #[error("no probes available for sort {0}")]
    ProbeSetEmpty(Sort),
    #[error("stage {requested} exceeds the enumeration bound {bound}")]
    StageTooLarge { requested: usize, bound: usize },
    #[error("ill-typed term: {0}")]
    IllTyped(String),
    #[error("sort {sort} has no closed term of size at most {size}")]
    UninhabitedAtSize { sort: Sort, size: usize },
    #[error("sort {0} has no closed terms in the configured fragment")]
    UninhabitedSort(Sort),
    #[error("environment has length {found}, context needs {expected}")]
    EnvLengthMismatch { expected: usize, found: usize },
    #[error("universe exceeded the cap of {0} terms")]
    UniverseExplosion(usize),
    #[error("parse error at {pos}: {msg}")]
    ParseError { pos: usize, msg: String },
    #[error("unknown operator family `{0}`")]
    UnknownOperator(String),
    #[error("forcing fuel exhausted after {0} nested steps")]
    FuelExhausted(usize),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(pos: usize, msg: impl Into<String>) -> Self {
        Error::ParseError {
            pos,
            msg: msg.into(),
        }
    }
}
