//! Sparse LU factorizations of `A^H - s E^H` and of `E`.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};

use crate::sparse::SparseMatrix;
use crate::{CMat, Cplx, Error, Result};

/// Reciprocal condition numbers below this count as singular.
pub const SINGULAR_RCOND: f64 = 1e-14;

/// Sparse LU with partial pivoting plus a 1-norm condition estimate.
pub struct SparseLu {
    lu: Lu<usize, Cplx>,
    n: usize,
    /// Estimated reciprocal 1-norm condition number.
    pub rcond: f64,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).field("rcond", &self.rcond).finish()
    }
}

fn to_faer(m: &CMat) -> Mat<Cplx> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: &Mat<Cplx>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn all_finite(m: &Mat<Cplx>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
}

impl SparseLu {
    /// Factorizes a square sparse matrix. `None` is returned when the matrix
    /// is singular, either structurally or numerically (non-finite solves or
    /// a reciprocal condition estimate below [`SINGULAR_RCOND`]).
    pub fn new(m: &SparseMatrix) -> Result<Option<Self>> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!("LU of a {}x{} matrix", m.nrows(), m.ncols())));
        }
        let n = m.nrows();
        let trip: Vec<Triplet<usize, usize, Cplx>> = m.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let mat = SparseColMat::<usize, Cplx>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::InvalidArgument(format!("sparse assembly failed: {e:?}")))?;
        let lu = match mat.sp_lu() {
            Ok(lu) => lu,
            Err(_) => return Ok(None),
        };
        let mut out = Self { lu, n, rcond: 0.0 };
        let norm1 = m.norm_one();
        match out.inverse_norm1_estimate() {
            Some(inv) if norm1 > 0.0 && inv.is_finite() && inv > 0.0 => out.rcond = 1.0 / (norm1 * inv),
            _ => return Ok(None),
        }
        if out.rcond < SINGULAR_RCOND {
            return Ok(None);
        }
        Ok(Some(out))
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Hager's estimate of `||M^{-1}||_1` (complex variant); `None` when a
    /// solve produces non-finite values.
    fn inverse_norm1_estimate(&self) -> Option<f64> {
        let n = self.n;
        if n == 0 {
            return Some(0.0);
        }
        let mut x = Mat::<Cplx>::from_fn(n, 1, |_, _| Cplx::new(1.0 / n as f64, 0.0));
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let mut y = x.clone();
            self.lu.solve_in_place(y.as_mut());
            if !all_finite(&y) {
                return None;
            }
            est = (0..n).map(|i| y[(i, 0)].norm()).sum::<f64>();
            let mut xi = Mat::<Cplx>::from_fn(n, 1, |i, _| {
                let v = y[(i, 0)];
                let a = v.norm();
                if a == 0.0 {
                    Cplx::new(1.0, 0.0)
                } else {
                    v / a
                }
            });
            self.lu.solve_adjoint_in_place(xi.as_mut());
            if !all_finite(&xi) {
                return None;
            }
            let (jmax, zmax) = (0..n)
                .map(|i| (i, xi[(i, 0)].norm()))
                .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let ztx: f64 = (0..n).map(|i| (xi[(i, 0)].conj() * x[(i, 0)]).re).sum();
            if zmax <= ztx || jmax == last_j {
                break;
            }
            last_j = jmax;
            x = Mat::<Cplx>::zeros(n, 1);
            x[(jmax, 0)] = Cplx::new(1.0, 0.0);
        }
        Some(est)
    }

    /// `M^{-1} rhs`
    pub fn solve(&self, rhs: &CMat) -> CMat {
        let mut x = to_faer(rhs);
        self.lu.solve_in_place(x.as_mut());
        from_faer(&x)
    }

    /// `M^{-H} rhs`
    pub fn solve_adjoint(&self, rhs: &CMat) -> CMat {
        let mut x = to_faer(rhs);
        self.lu.solve_adjoint_in_place(x.as_mut());
        from_faer(&x)
    }
}

/// Factorization of `A^H - s E^H` at one pole `s`.
#[derive(Debug)]
pub struct ShiftedFactorization {
    lu: SparseLu,
    pub shift: Cplx,
}

impl ShiftedFactorization {
    pub fn order(&self) -> usize {
        self.lu.order()
    }

    pub fn rcond(&self) -> f64 {
        self.lu.rcond
    }

    /// `(A^H - s E^H)^{-1} rhs`
    pub fn solve(&self, rhs: &CMat) -> CMat {
        self.lu.solve(rhs)
    }
}

/// Factorizes `A^H - s E^H` (with `E = I` when absent).
pub fn make_shifted_factorization(a: &SparseMatrix, e: Option<&SparseMatrix>, s: Cplx) -> Result<ShiftedFactorization> {
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite shift {s}")));
    }
    let n = a.nrows();
    let ident;
    let e = match e {
        Some(e) => e,
        None => {
            ident = SparseMatrix::identity(n);
            &ident
        }
    };
    let m = a.adjoint().linear_combination(Cplx::new(1.0, 0.0), &e.adjoint(), -s)?;
    match SparseLu::new(&m)? {
        Some(lu) => Ok(ShiftedFactorization { lu, shift: s }),
        None => Err(Error::ShiftHitsSpectrum { shift: s, rcond: 0.0 }),
    }
}
