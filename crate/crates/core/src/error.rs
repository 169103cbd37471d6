//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid dimensions must be at least 1x1 (got {rows}x{cols})")]
    InvalidGrid { rows: usize, cols: usize },

    #[error("grid spacing must be positive (got {0})")]
    InvalidSpacing(f64),

    #[error("location index {index} out of range for {len} locations")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("location set is empty")]
    EmptyLocationSet,

    #[error("duplicate location id {0:?}")]
    DuplicateId(String),

    #[error("locations {a:?} and {b:?} have identical coordinates")]
    DuplicatePoint { a: String, b: String },

    #[error("non-finite coordinate for location {0:?}")]
    NonFiniteCoordinate(String),

    #[error("covering radius unavailable; supply rho explicitly")]
    CoveringRadiusUnavailable,

    #[error("prior not normalized: probabilities sum to {sum}")]
    PriorNotNormalized { sum: f64 },

    #[error("prior has negative probability {prob} for id {id:?}")]
    NegativePriorEntry { id: String, prob: f64 },

    #[error("prior file is missing ids: {0:?}")]
    PriorMissingIds(Vec<String>),

    #[error("prior file has ids not in the location set: {0:?}")]
    PriorExtraIds(Vec<String>),

    #[error("prior length {prior} does not match location count {locs}")]
    DimensionMismatch { prior: usize, locs: usize },

    #[error("epsilon must be positive (got {0})")]
    InvalidEpsilon(f64),

    #[error("radius must be positive (got {0})")]
    InvalidRadius(f64),

    #[error("dilation factor must be at least 1 (got {0})")]
    InvalidDelta(f64),

    #[error("edge set is empty; cannot compute dilation")]
    EmptyEdgeSet,

    #[error("location graph is disconnected: no path between {a:?} and {b:?}")]
    Disconnected { a: String, b: String },

    #[error("solution not a channel: entry for ({x}, {y}) is {value}")]
    NotAChannel { x: usize, y: usize, value: f64 },

    #[error("row {x} of the channel sums to {sum}, expected 1")]
    RowSumInvalid { x: usize, sum: f64 },

    #[error("mechanism is bound to a different location set")]
    LocationSetMismatch,

    #[error("solver failed to certify optimality: {0}")]
    SolverCertification(String),

    #[error("solver basis became numerically singular")]
    SingularBasis,

    #[error("solution file references unknown variable {0:?}")]
    UnknownVariable(String),

    #[error("solution file is missing variable {0:?}")]
    MissingVariable(String),

    #[error("solution file sets variable {0:?} twice")]
    DuplicateVariable(String),

    #[error("imported point infeasible: max violation {max_violation} in row {row:?}")]
    InfeasiblePoint { max_violation: f64, row: String },

    #[error("malformed {what} at line {line}: {detail}")]
    Malformed {
        what: &'static str,
        line: usize,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
