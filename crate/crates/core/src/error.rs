use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A problem definition failed validation; `field` names the offending JSON field.
    #[error("invalid problem field `{field}`: {reason}")]
    InvalidProblem { field: &'static str, reason: String },

    #[error("belief lies on the simplex boundary (entry {index} = {value:e})")]
    BoundaryBelief { index: usize, value: f64 },

    #[error("all likelihoods underflowed during the Bayes update")]
    NumericalUnderflow,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operation requires exactly two models, got {0}")]
    NotTwoModel(usize),

    #[error("problem has shape {models} models x {actions} actions, expected 2 x 2")]
    WrongShape { models: usize, actions: usize },

    #[error("drift geometry has no interior fixed point")]
    NoFixedPoint,

    #[error("face must contain at least one model")]
    EmptyFace,

    #[error("model index {index} out of range for {count} models")]
    ModelOutOfRange { index: usize, count: usize },

    #[error("summary and classification belong to different problems ({left} vs {right})")]
    MismatchedProblem { left: String, right: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
