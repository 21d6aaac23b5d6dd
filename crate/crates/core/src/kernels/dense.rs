//! Dense complex factorizations used by every other module.
//!
//! Everything here operates on small matrices (at most a few thousand rows).
//! Backed by nalgebra's Householder QR, Hermitian eigensolver, complex Schur
//! form and SVD; the Schur reordering is implemented here.

use nalgebra::{SymmetricEigen, SVD};

use crate::{CMat, Cplx, Error, Result};

/// Default relative rank threshold.
pub const RANK_TOL: f64 = 1e-12;

/// Relative asymmetry tolerated by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;

const SCHUR_MAX_ITER: usize = 100_000;

fn czero() -> Cplx {
    Cplx::new(0.0, 0.0)
}

pub fn fro_norm(m: &CMat) -> f64 {
    m.norm()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = SVD::new(m.clone(), false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn spectral_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// 2-norm condition number; infinite for singular input, 1 for empty input.
pub fn cond2(m: &CMat) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        Some(&top) if top > 0.0 => sv.iter().filter(|&&s| s > rel_tol * top).count(),
        _ => 0,
    }
}

/// Thin QR factors with a real nonnegative diagonal of `r`.
#[derive(Clone, Debug)]
pub struct ThinQr {
    pub q: CMat,
    pub r: CMat,
}

/// Householder QR `m = q r` of a tall matrix; `q` is `a x b`, `r` is `b x b`.
pub fn thin_qr(m: &CMat) -> ThinQr {
    let (a, b) = m.shape();
    assert!(a >= b, "thin_qr needs rows >= cols, got {a}x{b}");
    if b == 0 {
        return ThinQr {
            q: CMat::zeros(a, 0),
            r: CMat::zeros(0, 0),
        };
    }
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    normalize_phases(&mut q, &mut r);
    ThinQr { q, r }
}

/// Rotates column `i` of `q` and row `i` of `r` so that `r[(i, i)]` is real
/// and nonnegative. The product `q r` is unchanged.
fn normalize_phases(q: &mut CMat, r: &mut CMat) {
    for i in 0..r.nrows().min(r.ncols()) {
        let d = r[(i, i)];
        let mag = d.norm();
        if mag == 0.0 {
            continue;
        }
        let phase = d / mag;
        r.row_mut(i).iter_mut().for_each(|v| *v *= phase.conj());
        r[(i, i)] = Cplx::new(mag, 0.0);
        q.column_mut(i).iter_mut().for_each(|v| *v *= phase);
    }
}

/// `R` factor of an economy QR of a matrix of any shape: `min(a, b) x b`.
pub fn economy_qr_r(m: &CMat) -> CMat {
    if m.is_empty() {
        return CMat::zeros(m.nrows().min(m.ncols()), m.ncols());
    }
    m.clone().qr().r()
}

/// Full QR: `q` is `a x a` unitary, `r` is `a x b` upper trapezoidal with a
/// real nonnegative leading diagonal.
pub fn full_qr(m: &CMat) -> (CMat, CMat) {
    let (a, b) = m.shape();
    // Householder QR of [M I] processes the columns of M first, so its leading
    // b columns reproduce the QR of M while the square Q is completed to a
    // unitary basis of the whole space.
    let mut aug = CMat::zeros(a, b + a);
    aug.columns_mut(0, b).copy_from(m);
    aug.columns_mut(b, a).fill_with_identity();
    let qr = aug.qr();
    let mut q = qr.q();
    let mut r = qr.r().columns(0, b).into_owned();
    normalize_phases(&mut q, &mut r);
    (q, r)
}

/// Orthonormal basis of `range(m)^⊥` taken from the trailing columns of a full
/// QR of `m`. An `m` with as many columns as rows yields an empty basis.
pub fn orth_complement_basis(m: &CMat) -> Result<CMat> {
    let (d, q) = m.shape();
    if q > d {
        return Err(Error::DimensionMismatch(format!(
            "complement of a {d}x{q} matrix with more columns than rows"
        )));
    }
    if q == 0 {
        return Ok(CMat::identity(d, d));
    }
    let (qf, r) = full_qr(m);
    let diag: Vec<f64> = (0..q).map(|i| r[(i, i)].norm()).collect();
    let hi = diag.iter().copied().fold(0.0, f64::max);
    let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == 0.0 || lo < RANK_TOL * hi {
        return Err(Error::RankDeficient {
            ratio: if hi == 0.0 { 0.0 } else { lo / hi },
        });
    }
    Ok(qf.columns(q, d - q).into_owned())
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    /// Descending.
    pub values: Vec<f64>,
    /// Unitary; column `i` belongs to `values[i]`.
    pub vectors: CMat,
}

pub fn hermitian_eig(m: &CMat) -> Result<HermitianEig> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(Error::DimensionMismatch(format!("eigenproblem of a {}x{} matrix", d, m.ncols())));
    }
    if d == 0 {
        return Ok(HermitianEig {
            values: Vec::new(),
            vectors: CMat::zeros(0, 0),
        });
    }
    let scale = m.norm();
    let asym = (m - m.adjoint()).norm();
    if asym > HERMITIAN_TOL * scale {
        return Err(Error::NonHermitianInput(asym / scale));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEig { values, vectors })
}

/// Complex Schur form `m = q t q^H` with `t` upper triangular.
pub fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(Error::DimensionMismatch(format!("Schur form of a {}x{} matrix", d, m.ncols())));
    }
    if d == 0 {
        return Ok((CMat::zeros(0, 0), CMat::zeros(0, 0)));
    }
    if !m.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::SchurFailure);
    }
    let s = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::SchurFailure)?;
    let (q, mut t) = s.unpack();
    for j in 0..d {
        for i in (j + 1)..d {
            t[(i, j)] = czero();
        }
    }
    Ok((q, t))
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<Cplx>> {
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

pub fn spectral_radius(m: &CMat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Schur form with a selected eigenvalue group moved to the leading block.
#[derive(Clone, Debug)]
pub struct OrderedSchur {
    pub q: CMat,
    pub t: CMat,
    /// Number of leading diagonal entries of `t` that satisfy the predicate.
    pub selected: usize,
}

/// Reorders a complex Schur form so that the eigenvalues satisfying `select`
/// occupy the leading diagonal positions, using adjacent Givens swaps.
pub fn ordered_schur(m: &CMat, select: impl Fn(Cplx) -> bool) -> Result<OrderedSchur> {
    let (mut q, mut t) = schur(m)?;
    let d = t.nrows();
    let scale = t.norm().max(f64::MIN_POSITIVE);
    let flags: Vec<bool> = (0..d).map(|i| select(t[(i, i)])).collect();
    let mut flags = flags;
    let mut head = 0;
    for k in 0..d {
        if !flags[k] {
            continue;
        }
        for pos in (head..k).rev() {
            swap_adjacent(&mut t, &mut q, pos, scale)?;
            flags.swap(pos, pos + 1);
        }
        head += 1;
    }
    let selected = (0..d).take_while(|&i| select(t[(i, i)])).count();
    Ok(OrderedSchur { q, t, selected })
}

/// Exchanges the diagonal entries at `pos` and `pos + 1` of the triangular
/// `t`, updating `q` so that `q t q^H` is preserved.
fn swap_adjacent(t: &mut CMat, q: &mut CMat, pos: usize, scale: f64) -> Result<()> {
    let d = t.nrows();
    let a = t[(pos, pos)];
    let b = t[(pos + 1, pos + 1)];
    let c = t[(pos, pos + 1)];
    // Eigenvector of the 2x2 block for eigenvalue b.
    let x0 = c;
    let x1 = b - a;
    let nx = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
    if nx == 0.0 {
        return Ok(());
    }
    let (al, be) = (x0 / nx, x1 / nx);
    // Z = [[al, -conj(be)], [be, conj(al)]], unitary with first column x/|x|.
    let z = [[al, -be.conj()], [be, al.conj()]];

    // Rows: t[pos..pos+2, :] <- Z^H t[pos..pos+2, :]
    for j in 0..d {
        let u = t[(pos, j)];
        let v = t[(pos + 1, j)];
        t[(pos, j)] = z[0][0].conj() * u + z[1][0].conj() * v;
        t[(pos + 1, j)] = z[0][1].conj() * u + z[1][1].conj() * v;
    }
    // Columns: t[:, pos..pos+2] <- t[:, pos..pos+2] Z, same for q.
    for mat in [&mut *t, &mut *q] {
        for i in 0..d {
            let u = mat[(i, pos)];
            let v = mat[(i, pos + 1)];
            mat[(i, pos)] = u * z[0][0] + v * z[1][0];
            mat[(i, pos + 1)] = u * z[0][1] + v * z[1][1];
        }
    }
    let residual = t[(pos + 1, pos)].norm();
    if residual > 100.0 * f64::EPSILON * scale {
        return Err(Error::ReorderingFailure {
            position: pos,
            residual,
        });
    }
    t[(pos + 1, pos)] = czero();
    Ok(())
}

/// Solves `m x = rhs` by LU with partial pivoting.
pub fn lu_solve(m: &CMat, rhs: &CMat) -> Result<CMat> {
    if m.nrows() != m.ncols() || m.nrows() != rhs.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "solve with a {}x{} matrix and a {}x{} right-hand side",
            m.nrows(),
            m.ncols(),
            rhs.nrows(),
            rhs.ncols()
        )));
    }
    if m.is_empty() {
        return Ok(CMat::zeros(0, rhs.ncols()));
    }
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::InvalidArgument("singular matrix in dense solve".into()))
}

/// A square matrix factorized once and reused for several solves, together
/// with its 2-norm condition number.
#[derive(Clone, Debug)]
pub struct DenseLu {
    lu: nalgebra::LU<Cplx, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
    pub cond: f64,
}

impl DenseLu {
    pub fn new(m: &CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!("LU of a {}x{} matrix", m.nrows(), m.ncols())));
        }
        Ok(Self {
            lu: m.clone().lu(),
            n: m.nrows(),
            cond: cond2(m),
        })
    }

    /// `m^{-1} rhs`
    pub fn solve(&self, rhs: &CMat) -> Result<CMat> {
        if self.n == 0 {
            return Ok(CMat::zeros(0, rhs.ncols()));
        }
        self.lu
            .solve(rhs)
            .ok_or_else(|| Error::InvalidArgument("singular matrix in dense solve".into()))
    }

    /// `m^{-H} rhs`
    pub fn solve_adjoint(&self, rhs: &CMat) -> Result<CMat> {
        if self.n == 0 {
            return Ok(CMat::zeros(0, rhs.ncols()));
        }
        // m^H = (P^T L U)^H = U^H L^H P, so m^{-H} = P^T L^{-H} U^{-H}.
        let mut x = rhs.clone();
        let u = self.lu.u();
        let l = self.lu.l();
        if !u.adjoint().solve_lower_triangular_mut(&mut x) {
            return Err(Error::InvalidArgument("singular matrix in dense solve".into()));
        }
        if !l.adjoint().solve_upper_triangular_mut(&mut x) {
            return Err(Error::InvalidArgument("singular matrix in dense solve".into()));
        }
        self.lu.p().inv_permute_rows(&mut x);
        Ok(x)
    }
}
