use thiserror::Error;

use crate::fit::FitResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid is not strictly increasing at index {index}: {prev} >= {next}")]
    NonMonotoneGrid { index: usize, prev: f64, next: f64 },

    #[error("grid needs at least 2 nodes, got {0}")]
    TooShort(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("basis index {index} out of range for a grid of {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("slope vector head must repeat: s[0] = {0}, s[1] = {1}")]
    InconsistentSlopeHead(f64, f64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("point set has a jump at x = {0}; a continuous interpolant is required")]
    JumpNotAllowed(f64),

    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("curve points are out of order at index {0}")]
    UnorderedPoints(usize),

    #[error("duplicate point at index {0}: equal abscissa requires distinct ordinates")]
    DuplicatePoint(usize),

    #[error("curve is not monotone: y decreases at index {0}")]
    NotMonotone(usize),

    #[error("invalid slope bounds: need s_min < s_max, got [{0}, {1}]")]
    InvalidBounds(f64, f64),

    #[error("spline is not nondecreasing (minimum slope {0})")]
    NotNondecreasing(f64),

    #[error("prox spline has a flat boundary segment; its potential is infinite outside a half-line")]
    FlatBoundarySegment,

    #[error("lambda = {lambda} out of range: {reason}")]
    LambdaOutOfRange { lambda: f64, reason: String },

    #[error("weak convexity modulus {0} >= 1; the prox is not single-valued")]
    WeakConvexityTooLarge(f64),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("spline grid does not match the problem grid")]
    GridMismatch,

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("solver did not converge (residual {:e} after {} iterations)", .0.optimality_residual, .0.iterations)]
    DidNotConverge(Box<FitResult>),

    #[error("problem too large for the exhaustive oracle: N = {n}, M = {m} (cap 12)")]
    TooLarge { n: usize, m: usize },

    #[error("nonlinearity mode mismatch: expected {expected}")]
    ModeMismatch { expected: &'static str },

    #[error("desk-scale limit exceeded: {0}")]
    ScaleTooLarge(String),

    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),

    #[error("invalid filter bank: {0}")]
    InvalidFilterBank(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
