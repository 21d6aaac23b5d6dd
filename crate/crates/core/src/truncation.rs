//! Truncation of `X = V K Y K^H V^H` to a positive semidefinite iterate of
//! lower rank that solves a projected Riccati equation of its own.
//!
//! With `K = Q_K R_K`, the eigendecomposition `R_K Y R_K^H = G Λ G^H` gives
//! the eigendecomposition of `K Y K^H` restricted to `range(K)`. Eigenpairs
//! with `λ > τ ρ` are kept:
//!
//! ```text
//! Q̂ = Q_K G_keep,   Ŷ = Λ_keep,   T1 = R_K^{-1} G_keep = K^+ Q̂,   Ĥ = H T1,
//! ```
//!
//! so that `A^H V Q̂ = E^H V Ĥ`. The test basis `L̂` spans the part of
//! `range(L)` orthogonal to the dropped directions `Q_K G_drop`. This keeps
//! `π̂ π = π̂` for every choice of `L`; for `L = K` it spans `range(Q̂)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::brad::Brad;
use crate::kernels::{hermitian_eig, hermitian_part, orth_complement_basis, thin_qr};
use crate::problem::CheckedProblem;
use crate::residual::{compressed_residual_norm, ResidualNorm};
use crate::{CMat, Cplx, Error, Result};

pub const DEFAULT_TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Eigenvalues `λ <= tau * ρ(K Y K^H)` are dropped, including every
    /// non-positive one.
    pub tau: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU }
    }
}

impl TruncationPolicy {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidArgument(format!("truncation threshold {tau} is outside (0, 1)")));
        }
        Ok(Self { tau })
    }
}

#[derive(Clone, Debug)]
pub struct TruncatedSolution {
    /// `(j+1)p x r`, orthonormal columns.
    pub q_hat: CMat,
    /// Kept eigenvalues, descending and positive.
    pub y_hat: Vec<f64>,
    /// `H T1`
    pub h_hat: CMat,
    pub l_hat: CMat,
    pub t1: CMat,
    /// Eigenvalues of `K Y K^H` that were dropped.
    pub discarded: Vec<f64>,
    /// `ρ(K Y K^H)`
    pub rho: f64,
}

impl TruncatedSolution {
    pub fn rank(&self) -> usize {
        self.q_hat.ncols()
    }

    pub fn y_hat_matrix(&self) -> CMat {
        CMat::from_diagonal(&DVector::from_iterator(
            self.y_hat.len(),
            self.y_hat.iter().map(|&v| Cplx::new(v, 0.0)),
        ))
    }

    /// `V Q̂`, the `n x r` factor of `X̂ = (V Q̂) Ŷ (V Q̂)^H`.
    pub fn z_hat(&self, brad: &Brad) -> CMat {
        brad.v_mul(&self.q_hat)
    }
}

/// Truncates `X = V K Y K^H V^H` for the test space `l`.
pub fn truncate(k: &CMat, h: &CMat, l: &CMat, y: &CMat, policy: &TruncationPolicy) -> Result<TruncatedSolution> {
    let q = k.ncols();
    if y.shape() != (q, q) || h.shape() != k.shape() || l.shape() != k.shape() {
        return Err(Error::DimensionMismatch(format!(
            "truncation inputs K {:?}, H {:?}, L {:?}, Y {:?}",
            k.shape(),
            h.shape(),
            l.shape(),
            y.shape()
        )));
    }
    let qk = thin_qr(k);
    let inner = hermitian_part(&(&qk.r * hermitian_part(y) * qk.r.adjoint()));
    let eig = hermitian_eig(&inner)?;
    let rho = eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let cut = policy.tau * rho;
    let keep: Vec<usize> = (0..q).filter(|&i| eig.values[i] > cut).collect();
    let drop: Vec<usize> = (0..q).filter(|&i| eig.values[i] <= cut).collect();
    if keep.is_empty() {
        return Err(Error::AllTruncated);
    }
    let g_keep = eig.vectors.select_columns(&keep);
    let g_drop = eig.vectors.select_columns(&drop);
    let q_hat = &qk.q * &g_keep;
    let t1 = qk
        .r
        .solve_upper_triangular(&g_keep)
        .ok_or(Error::RankDeficient { ratio: 0.0 })?;
    let h_hat = h * &t1;
    let dropped_dirs = &qk.q * &g_drop;
    let n = orth_complement_basis(&(l.adjoint() * &dropped_dirs))?;
    let l_hat = l * n;
    Ok(TruncatedSolution {
        q_hat,
        y_hat: keep.iter().map(|&i| eig.values[i]).collect(),
        h_hat,
        l_hat,
        t1,
        discarded: drop.iter().map(|&i| eig.values[i]).collect(),
        rho,
    })
}

/// Generic rank of the residual of a truncated iterate (for `n` large
/// enough). The complement bases have `(j+1)p - r` columns, so the compressed
/// residual has rank at most twice that. The residual also lies in
/// `range([A^H Ẑ, Ẑ, C^H])`, which caps the rank at `2r + p` when almost
/// everything is truncated.
pub fn truncated_residual_rank(j: usize, p: usize, r: usize) -> usize {
    (2 * ((j + 1) * p).saturating_sub(r)).min(2 * r + p)
}

/// Residual norm of `X̂` through the compressed formula with `K̂ = Q̂`, `Ĥ`,
/// `L̂` and `Ŷ`. The complement bases have `(j+1)p - r` columns.
pub fn truncated_residual_norm(
    trunc: &TruncatedSolution,
    brad: &Brad,
    problem: Option<&CheckedProblem>,
    kind: ResidualNorm,
) -> Result<f64> {
    compressed_residual_norm(
        &trunc.q_hat,
        &trunc.h_hat,
        &trunc.l_hat,
        &brad.ctilde(),
        &trunc.y_hat_matrix(),
        problem.map(|p| (brad, p)),
        kind,
    )
}
