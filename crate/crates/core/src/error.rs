use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate rating for user {user}, object {object}")]
    DuplicatePair { user: usize, object: usize },

    #[error("index out of range: user {user} (of {num_users}), object {object} (of {num_objects})")]
    IndexOutOfRange {
        user: usize,
        object: usize,
        num_users: usize,
        num_objects: usize,
    },

    #[error("rating {value} for user {user}, object {object} outside [1, {r_max}]")]
    RatingOutOfBounds {
        user: usize,
        object: usize,
        value: f64,
        r_max: u32,
    },

    #[error("non-integer rating {value} for user {user}, object {object} in discrete mode")]
    NonIntegerRatingInDiscreteMode { user: usize, object: usize, value: f64 },

    #[error("dataset is empty after removing isolated users and objects")]
    EmptyDataset,

    #[error("dataset has isolated users or objects; prune it first")]
    IsolatedEntities,

    #[error("all raters of object {0} have zero weight")]
    ZeroWeightDenominator(usize),

    #[error("user {0} has zero total steadiness over the objects they rated")]
    ZeroSteadinessDenominator(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("need at least {needed} items, got {got}")]
    TooFewItems { needed: usize, got: usize },

    #[error("no relevant items")]
    NoRelevantItems,

    #[error("no irrelevant items")]
    NoIrrelevantItems,

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("result sink failed: {0}")]
    Sink(String),

    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.into(),
    }
}
