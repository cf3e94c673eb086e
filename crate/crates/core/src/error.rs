use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid array configuration: {0}")]
    InvalidArray(&'static str),
    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(&'static str),
    #[error("polar conversion is undefined at the array origin")]
    DegenerateOrigin,
    #[error("point lies outside the half-plane in front of the array (y <= 0)")]
    OutsideHalfPlane,
    #[error("{what} index {index} out of range 1..={max}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("path list is empty")]
    EmptyPaths,
    #[error("invalid count: {0}")]
    InvalidCount(&'static str),
    #[error("user location at {radius} exceeds the Rayleigh distance {rayleigh}")]
    OutsideNearField { radius: f64, rayleigh: f64 },
    #[error("channel vector does not match its path synthesis")]
    InconsistentChannel,
    #[error("grid is empty")]
    EmptyGrid,
    #[error("total power must be positive, got {0}")]
    NonPositivePower(f64),
    #[error("channel vector is zero")]
    ZeroChannel,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("beamformer violates the {kind} constraint (column {column}, deviation {deviation:e})")]
    ConstraintViolation {
        kind: &'static str,
        column: usize,
        deviation: f64,
    },
    #[error("effective channel is singular (condition number {0:e})")]
    SingularChannel(f64),
    #[error("missing input: {0}")]
    MissingInput(&'static str),
}
