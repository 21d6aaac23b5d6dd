//! Low-rank solution of large-scale continuous-time algebraic Riccati
//! equations
//!
//! ```text
//! A^H X E + E^H X A + C^H C - E^H X B B^H X E = 0
//! ```
//!
//! by oblique projection onto block rational Krylov subspaces
//! `range([(A^H - s_1 E^H)^{-1} E^H..., ...])`.
//!
//! The pipeline is:
//!
//! 1. [`problem`] validates `(A, E, B, C)` or generates the finite-difference
//!    convection-diffusion benchmark family.
//! 2. [`shifts`] supplies the pole sequence.
//! 3. [`brad`] grows an orthonormal block rational Arnoldi decomposition
//!    `A^H V K = E^H V H`.
//! 4. [`projector`] chooses the test space `L`, forms and solves the small
//!    projected Riccati equation with [`dense_care`], and drives the outer
//!    iteration.
//! 5. [`residual`] evaluates `||R(X_j)||` from small matrices only, and
//!    [`truncation`] compresses the iterate to a PSD factor of lower rank.
//!
//! All arithmetic is complex (`Complex64`), also for real input data.

pub mod brad;
pub mod dense_care;
pub mod error;
pub mod kernels;
pub mod matrix_market;
pub mod problem;
pub mod projector;
pub mod residual;
pub mod shifts;
pub mod sparse;
pub mod testkit;
pub mod truncation;

pub use error::{Error, Result};

/// Scalar type used throughout.
pub type Cplx = num_complex::Complex64;

/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<Cplx>;

/// Largest order for which dense `n x n` objects are ever materialized.
pub const DENSE_CAP: usize = 500;

pub use brad::Brad;
pub use dense_care::{solve_care_dense, DenseCareSolution};
pub use problem::{CareProblem, CheckedProblem};
pub use projector::{run, ProjectorChoice, RunOptions, RunResult};
pub use shifts::ShiftSequence;
pub use sparse::SparseMatrix;
pub use truncation::{TruncatedSolution, TruncationPolicy};
