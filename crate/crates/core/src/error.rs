use thiserror::Error;

use crate::geometry::MinimalCone;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("doubled coordinates ({t2}, {i2}) have different parity")]
    InvalidCone { t2: i32, i2: i32 },

    #[error("cannot parse cone literal {0:?}")]
    ParseCone(String),

    #[error("causal shadow leaves the segment window: {0}")]
    WindowOverflow(MinimalCone),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("enumeration cap exceeded: {what} has size {size}, cap is {cap}")]
    CapExceeded { what: &'static str, size: usize, cap: usize },

    #[error("event support is not contained in the state domain (missing {0})")]
    SupportNotContained(MinimalCone),

    #[error("conditioning on an event of zero probability")]
    ZeroProbability,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid transition table: {0}")]
    InvalidTable(String),

    #[error("2x2 transition matrix is singular: p(c+) = p(c-) = {0}")]
    NotInvertible(f64),

    #[error("backward extension gives negative probability ({phi_plus_earlier}, {phi_minus_earlier}) at ratio {ratio}")]
    NegativeProbability { phi_plus_earlier: f64, phi_minus_earlier: f64, ratio: f64 },

    #[error("backward extension failed at cell {cell} with context ({left}, {right}): {source}")]
    BackwardCell { cell: MinimalCone, left: char, right: char, #[source] source: Box<Error> },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("region {0} is not part of the net")]
    MissingRegion(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("events are not correlated in this state (|p(ab) - p(a)p(b)| = {0:e})")]
    NotCorrelated(f64),

    #[error("no candidate region in the requested past")]
    NoCandidateRegion,
}
