use thiserror::Error;

use crate::rat::Rat;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed rational {0:?}: expected \"p/q\" or \"n\"")]
    ParseRat(String),

    #[error("invalid open interval ({lo}, {hi}): need 0 <= lo < hi <= 1")]
    InvalidInterval { lo: Rat, hi: Rat },

    #[error("invalid step function: {0}")]
    InvalidStepFunction(String),

    #[error("point {x} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: Rat, lo: Rat, hi: Rat },

    #[error(
        "domain mismatch: sequence on [{seq_lo}, {seq_hi}], limit on [{limit_lo}, {limit_hi}]"
    )]
    DomainMismatch {
        seq_lo: Rat,
        seq_hi: Rat,
        limit_lo: Rat,
        limit_hi: Rat,
    },

    #[error("uniform bound hypothesis violated: |value| = {value} is not < C = {bound}{}", term_suffix(*.index))]
    BoundViolated {
        index: Option<usize>,
        value: Rat,
        bound: Rat,
    },

    #[error("unknown function family {0:?}")]
    UnknownFamily(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("term index {index} out of range (sequence has {len} terms, indices start at 1)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("epsilon {0} must satisfy 0 < epsilon < 1/2")]
    InvalidEpsilon(Rat),

    #[error("hypothesis integral > 2*epsilon fails{}: integral = {integral}, 2*epsilon = {two_epsilon}", term_suffix(*.index))]
    IntegralTooSmall {
        index: Option<usize>,
        integral: Rat,
        two_epsilon: Rat,
    },

    #[error("function must map [0,1] into [0,1]: {0}")]
    NotUnitForm(String),

    #[error("requested {requested} tail unions but only {available} supports are available")]
    NotEnoughSupports { requested: usize, available: usize },

    #[error(
        "budget {budget} unreachable: declared tail bound still exceeds it after {cap} intervals"
    )]
    BudgetUnreachable { budget: Rat, cap: usize },

    #[error("enumerated interval #{index} overlaps an earlier one")]
    EnumerationOverlap { index: usize },

    #[error("level sets are not nested: level {level} is not a subset of level {}", .level - 1)]
    NotNested { level: usize },

    #[error("level {level} has length {length}, below the required {required}")]
    LevelTooShort {
        level: usize,
        length: Rat,
        required: Rat,
    },

    #[error("no level sets supplied")]
    NoLevels,

    #[error("horizon {horizon} must be between 1 and the tree depth {depth}")]
    InvalidHorizon { horizon: usize, depth: usize },

    #[error("insufficient splitting before horizon {horizon}: no live node has three descendants at any depth")]
    InsufficientSplitting { horizon: usize },

    #[error("malformed partition: {0}")]
    MalformedPartition(String),

    #[error("postcondition failed: {0}")]
    Postcondition(String),

    #[error("json: {0}")]
    Json(String),
}

fn term_suffix(index: Option<usize>) -> String {
    match index {
        Some(n) => format!(" for term {n}"),
        None => String::new(),
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
