use thiserror::Error;

use crate::projector::RunResult;
use crate::Cplx;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("E is singular (estimated reciprocal condition {rcond:.3e})")]
    SingularE { rcond: f64 },

    #[error("indicator range {0} captures no grid node")]
    EmptyIndicator(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported Matrix Market field: {0}")]
    UnsupportedField(String),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NonHermitianInput(f64),

    #[error("Schur decomposition did not converge")]
    SchurFailure,

    #[error("eigenvalue swap at position {position} failed the stability test (residual {residual:.3e})")]
    ReorderingFailure { position: usize, residual: f64 },

    #[error("shift {shift} hits the spectrum (estimated reciprocal condition {rcond:.3e})")]
    ShiftHitsSpectrum { shift: Cplx, rcond: f64 },

    #[error("matrix is numerically rank deficient (smallest/largest R diagonal {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("shift list contains a non-finite value at index {0}")]
    InfiniteShift(usize),

    #[error("shift list is empty")]
    EmptyList,

    #[error("shifts {first} and {second} coincide and repetition is not allowed")]
    DuplicateShift { first: usize, second: usize },

    #[error("spectral estimate did not converge: {0}")]
    EstimateFailure(String),

    #[error("C^H has numerically dependent columns (ratio {ratio:.3e})")]
    RankDeficientC { ratio: f64 },

    #[error("Krylov breakdown at block {block}: new block has numerical rank {rank} < {expected}")]
    Breakdown {
        block: usize,
        rank: usize,
        expected: usize,
    },

    #[error("no stabilizing solution: {stable} stable Hamiltonian eigenvalues, {expected} required")]
    NoStabilizingSolution { stable: usize, expected: usize },

    #[error("invariant subspace basis U1 is ill conditioned (cond {0:.3e})")]
    IllConditionedU1(f64),

    #[error("Lyapunov operator is singular: eigenvalues {0} and {1} collide")]
    SpectrumCollision(Cplx, Cplx),

    #[error("L^H K is numerically singular (condition {0:.3e})")]
    SingularLtK(f64),

    #[error("U^H W is numerically singular (condition {0:.3e})")]
    SingularUW(f64),

    #[error("truncation removed every eigenvalue")]
    AllTruncated,

    #[error("order {n} exceeds the dense cap {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("shift sequence exhausted before convergence")]
    ShiftsExhausted(Box<RunResult>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
