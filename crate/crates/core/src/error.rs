use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("space mismatch: `{left}` vs `{right}`")]
    SpaceMismatch { left: String, right: String },

    #[error("index {index} is not valid in space `{space}`")]
    InvalidIndex { space: String, index: String },

    #[error("nonzero tail is not allowed in space `{0}`")]
    InvalidTail(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("unit is not valid here: {0}")]
    InvalidUnit(String),

    #[error("functional is not valid here: {0}")]
    InvalidFunctional(String),

    #[error("expected a nonnegative element: {0}")]
    NegativeInput(String),

    #[error("domination fails at entry {index}: {lhs} > {rhs}")]
    DominationFailure { index: String, lhs: String, rhs: String },

    #[error("column {0} is active but the given factor vanishes there")]
    ZeroOnActiveColumn(String),

    #[error("`{0}` is not a tensor grid over the given factors")]
    UnregisteredTensor(String),

    #[error("operation requires finite-grid factors")]
    NonFiniteFactor,

    #[error("product is not representable as coordinates plus a constant tail")]
    Unrepresentable,

    #[error("operation requires a nonzero element")]
    ZeroElement,

    #[error("scalar {0} has modulus greater than one")]
    ScalarOutOfRange(String),

    #[error("empty trace")]
    EmptyTrace,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("search space of {size} points exceeds the cap of {cap}")]
    SearchSpaceOverflow { size: u128, cap: u128 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
