use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::almostrep::GroupElement;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid resolution {0} is below the minimum of 4")]
    GridTooCoarse(usize),

    #[error("invalid covering geometry: {0}")]
    InvalidCovering(String),

    #[error("grid point {0} is not covered by any chart")]
    Uncovered(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("eigenvalue {0} lies outside [0, 1] beyond the clamping window")]
    SpectrumOutOfDomain(f64),

    #[error("Kato bound hypothesis violated: {0}")]
    KatoHypothesis(String),

    #[error("transition value g[{alpha}][{beta}] at point {point} is not unitary (residual {residual:e})")]
    NotUnitary { alpha: usize, beta: usize, point: usize, residual: f64 },

    #[error("fields or partitions live on different coverings")]
    CoveringMismatch,

    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("perturbation strength {0} is outside [0, 0.5]")]
    InvalidStrength(f64),

    #[error("group cocycle relation fails on charts ({0}, {1}, {2}) at point {3}")]
    GroupCocycleRelation(usize, usize, usize, usize),

    #[error("representation does not map the inverse of {0:?} to the inverse matrix")]
    InverseViolation(GroupElement),

    #[error("finite subset is missing required elements {0:?}")]
    SubsetTooSmall(Vec<GroupElement>),

    #[error("finite subset must contain the identity and be closed under inverses")]
    InvalidSubset,

    #[error("almost-projection defect {0} is not below 1/4")]
    NotAlmostProjection(f64),

    #[error("rank jumps from {rank_a} at point {a} to {rank_b} at point {b}; refine the grid")]
    RankJump { a: usize, rank_a: usize, b: usize, rank_b: usize },

    #[error("projection moves by {distance} between adjacent points {a} and {b}")]
    Discontinuous { a: usize, b: usize, distance: f64 },

    #[error("trace at point {point} is {deviation:e} away from an integer")]
    NonIntegerTrace { point: usize, deviation: f64 },

    #[error("frame overlap between points {a} and {b} is singular (|det| = {det:e}); refine the grid")]
    SingularOverlap { a: usize, b: usize, det: f64 },

    #[error("operation requires a torus grid")]
    NotTorus,

    #[error("representation map has dimension {found}, expected {expected}")]
    RepDimension { expected: usize, found: usize },
}
