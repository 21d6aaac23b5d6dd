//! Residual norms of `X = V K Y K^H V^H` from small matrices only.
//!
//! With `U` and `W` orthonormal bases of `range(L)^⊥` and `range(K)^⊥`,
//!
//! ```text
//! Γ = W (U^H W)^{-1},   Ψ = C̃^H Γ,
//! T = K Y H^H Γ + (C̃ - ½ U Ψ^H) Ψ,
//! R(X) = V (U T^H + T U^H) V^H,
//! ```
//!
//! so `||R(X)|| = ||R_f J R_f^H||` for any unitarily invariant norm, where
//! `[U T] = Q R_f` and `J` swaps the two column halves. In the generalized
//! case the QR is taken of `E^H V [U T]` instead.

use serde::{Deserialize, Serialize};

use crate::brad::Brad;
use crate::kernels::{cond2, economy_qr_r, orth_complement_basis, singular_values, DenseLu};
use crate::problem::CheckedProblem;
use crate::{CMat, Error, Result, DENSE_CAP};

/// Largest admissible condition number of `U^H W`.
pub const UW_COND_MAX: f64 = 1e12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResidualNorm {
    #[default]
    Frobenius,
    Spectral,
}

/// Intermediate quantities of the compressed residual.
#[derive(Clone, Debug)]
pub struct ResidualWorkspace {
    /// Basis of `range(L)^⊥`.
    pub u: CMat,
    /// Basis of `range(K)^⊥`.
    pub w: CMat,
    pub gamma: CMat,
    pub psi: CMat,
    pub t: CMat,
    pub cond_uw: f64,
}

impl ResidualWorkspace {
    /// `k`, `h`, `l` share their shape `d x q` with `q <= d`; `ctilde` is
    /// `d x p` and `y` is `q x q` Hermitian.
    pub fn new(k: &CMat, h: &CMat, l: &CMat, ctilde: &CMat, y: &CMat) -> Result<Self> {
        let (d, q) = k.shape();
        if h.shape() != (d, q) || l.shape() != (d, q) || y.shape() != (q, q) || ctilde.nrows() != d {
            return Err(Error::DimensionMismatch(format!(
                "residual inputs K {:?}, H {:?}, L {:?}, Y {:?}, C̃ {:?}",
                k.shape(),
                h.shape(),
                l.shape(),
                y.shape(),
                ctilde.shape()
            )));
        }
        let u = orth_complement_basis(l)?;
        let w = orth_complement_basis(k)?;
        let dc = d - q;
        let uw = u.adjoint() * &w;
        let cond_uw = cond2(&uw);
        if cond_uw > UW_COND_MAX {
            return Err(Error::SingularUW(cond_uw));
        }
        // Γ = W (U^H W)^{-1}  <=>  Γ^H = (U^H W)^{-H} W^H
        let gamma = if dc == 0 {
            CMat::zeros(d, 0)
        } else {
            DenseLu::new(&uw)?.solve_adjoint(&w.adjoint())?.adjoint()
        };
        let psi = ctilde.adjoint() * &gamma;
        let t = k * (y * (h.adjoint() * &gamma)) + (ctilde - (&u * psi.adjoint()).scale(0.5)) * &psi;
        Ok(Self {
            u,
            w,
            gamma,
            psi,
            t,
            cond_uw,
        })
    }

    /// `[U T]`
    pub fn ut(&self) -> CMat {
        let (d, dc) = self.u.shape();
        let mut m = CMat::zeros(d, 2 * dc);
        m.columns_mut(0, dc).copy_from(&self.u);
        m.columns_mut(dc, dc).copy_from(&self.t);
        m
    }

    /// Complement dimension `d_c`.
    pub fn dc(&self) -> usize {
        self.u.ncols()
    }

    /// `R J R^H` where `R` is the triangular factor of `tall` (either `[U T]`
    /// or `E^H V [U T]`).
    pub fn core_from(&self, tall: &CMat) -> CMat {
        let dc = self.dc();
        let r = economy_qr_r(tall);
        let mut rj = CMat::zeros(r.nrows(), 2 * dc);
        rj.columns_mut(0, dc).copy_from(&r.columns(dc, dc));
        rj.columns_mut(dc, dc).copy_from(&r.columns(0, dc));
        rj * r.adjoint()
    }

    /// `R J R^H` in the standard case.
    pub fn core(&self) -> CMat {
        self.core_from(&self.ut())
    }
}

pub fn matrix_norm(m: &CMat, kind: ResidualNorm) -> f64 {
    match kind {
        ResidualNorm::Frobenius => m.norm(),
        ResidualNorm::Spectral => singular_values(m).first().copied().unwrap_or(0.0),
    }
}

/// Compressed residual norm from raw small matrices. `problem` switches to the
/// generalized formula when it carries an `E`; `brad` provides `V` then.
pub fn compressed_residual_norm(
    k: &CMat,
    h: &CMat,
    l: &CMat,
    ctilde: &CMat,
    y: &CMat,
    generalized: Option<(&Brad, &CheckedProblem)>,
    kind: ResidualNorm,
) -> Result<f64> {
    let ws = ResidualWorkspace::new(k, h, l, ctilde, y)?;
    if ws.dc() == 0 {
        return Ok(0.0);
    }
    let core = match generalized {
        Some((brad, problem)) if problem.e().is_some() => ws.core_from(&problem.apply_eh(&brad.v_mul(&ws.ut()))),
        _ => ws.core(),
    };
    Ok(matrix_norm(&core, kind))
}

/// `||A^H X + X A + C^H C - X B B^H X||_F` for `X = V K Y K^H V^H`.
pub fn residual_norm(brad: &Brad, l: &CMat, y: &CMat) -> Result<f64> {
    compressed_residual_norm(brad.k(), brad.h(), l, &brad.ctilde(), y, None, ResidualNorm::Frobenius)
}

/// Residual norm of the generalized equation
/// `A^H X E + E^H X A + C^H C - E^H X B B^H X E`.
pub fn residual_norm_generalized(brad: &Brad, l: &CMat, y: &CMat, problem: &CheckedProblem) -> Result<f64> {
    residual_norm_with(brad, l, y, problem, ResidualNorm::Frobenius)
}

/// Residual norm in either norm, using the generalized formula when the
/// problem has an `E`.
pub fn residual_norm_with(brad: &Brad, l: &CMat, y: &CMat, problem: &CheckedProblem, kind: ResidualNorm) -> Result<f64> {
    compressed_residual_norm(brad.k(), brad.h(), l, &brad.ctilde(), y, Some((brad, problem)), kind)
}

/// Singular values of `R J R^H` (descending), whose nonzero count is the rank
/// of the residual.
pub fn residual_rank_profile(brad: &Brad, l: &CMat, y: &CMat) -> Result<Vec<f64>> {
    let ws = ResidualWorkspace::new(brad.k(), brad.h(), l, &brad.ctilde(), y)?;
    Ok(singular_values(&ws.core()))
}

/// Dense residual matrix of the (generalized) Riccati equation.
pub fn dense_residual_matrix(problem: &CheckedProblem, x: &CMat) -> Result<CMat> {
    let n = problem.n();
    if n > DENSE_CAP {
        return Err(Error::CapExceeded { n, cap: DENSE_CAP });
    }
    if x.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("X is {:?}, expected {n}x{n}", x.shape())));
    }
    let a = problem.a().to_dense();
    let e = problem.e().map(|e| e.to_dense()).unwrap_or_else(|| CMat::identity(n, n));
    let c = problem.c();
    let xe = x * &e;
    let ehxb = xe.adjoint() * problem.b();
    Ok(a.adjoint() * &xe + xe.adjoint() * &a + c.adjoint() * c - &ehxb * ehxb.adjoint())
}

/// Frobenius norm of the dense residual.
pub fn dense_residual_oracle(problem: &CheckedProblem, x: &CMat) -> Result<f64> {
    Ok(dense_residual_matrix(problem, x)?.norm())
}
