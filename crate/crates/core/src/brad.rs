//! Orthonormal block rational Arnoldi decompositions
//! `A^H V K = E^H V H` with `C^H = E^H V C̃`.

use std::sync::Arc;

use crate::kernels::{cond2, singular_values, thin_qr, ShiftedFactorization, RANK_TOL};
use crate::problem::CheckedProblem;
use crate::{CMat, Cplx, Error, Result};

/// Block rational Arnoldi decomposition after `j` steps.
///
/// `V` is stored blockwise; extending shares every existing block with the
/// parent decomposition. `K` and `H` are `(j+1)p x jp` block upper
/// Hessenberg. After [`Brad::close_invariant`] the last step added no block and
/// `K`, `H` are square.
#[derive(Clone, Debug)]
pub struct Brad {
    n: usize,
    p: usize,
    blocks: Vec<Arc<CMat>>,
    k: CMat,
    h: CMat,
    r0: CMat,
    poles: Vec<Cplx>,
    vh_b: CMat,
    closed: bool,
}

/// Result of one rational Arnoldi solve and orthogonalization.
struct Expansion {
    coef: CMat,
    remainder: CMat,
    scale: f64,
}

impl Brad {
    /// Starts from `C^H = E^H V_1 R0` (`V_1 R0 = C^H` when `E = I`).
    pub fn init(problem: &CheckedProblem) -> Result<Self> {
        let ch = problem.c().adjoint();
        let start = problem.solve_eh(&ch);
        let qr = thin_qr(&start);
        let diag: Vec<f64> = (0..qr.r.nrows()).map(|i| qr.r[(i, i)].re).collect();
        let hi = diag.iter().copied().fold(0.0, f64::max);
        let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
        if hi == 0.0 || lo < RANK_TOL * hi {
            return Err(Error::RankDeficientC {
                ratio: if hi == 0.0 { 0.0 } else { lo / hi },
            });
        }
        let vh_b = qr.q.adjoint() * problem.b();
        Ok(Self {
            n: problem.n(),
            p: problem.p(),
            k: CMat::zeros(problem.p(), 0),
            h: CMat::zeros(problem.p(), 0),
            blocks: vec![Arc::new(qr.q)],
            r0: qr.r,
            poles: Vec::new(),
            vh_b,
            closed: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of completed steps.
    pub fn j(&self) -> usize {
        self.poles.len()
    }

    /// Columns of `V`.
    pub fn basis_dim(&self) -> usize {
        self.blocks.len() * self.p
    }

    /// True when the last step found an invariant subspace.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn k(&self) -> &CMat {
        &self.k
    }

    pub fn h(&self) -> &CMat {
        &self.h
    }

    pub fn r0(&self) -> &CMat {
        &self.r0
    }

    pub fn poles(&self) -> &[Cplx] {
        &self.poles
    }

    /// `V^H B`, maintained block by block.
    pub fn vh_b(&self) -> &CMat {
        &self.vh_b
    }

    pub fn blocks(&self) -> &[Arc<CMat>] {
        &self.blocks
    }

    /// `C̃ = [R0; 0]`.
    pub fn ctilde(&self) -> CMat {
        let mut c = CMat::zeros(self.basis_dim(), self.p);
        c.view_mut((0, 0), (self.p, self.p)).copy_from(&self.r0);
        c
    }

    /// `V` as one dense `n x (j+1)p` matrix.
    pub fn v_dense(&self) -> CMat {
        let mut v = CMat::zeros(self.n, self.basis_dim());
        for (i, b) in self.blocks.iter().enumerate() {
            v.columns_mut(i * self.p, self.p).copy_from(b);
        }
        v
    }

    /// `V x` without materializing `V`.
    pub fn v_mul(&self, x: &CMat) -> CMat {
        assert_eq!(x.nrows(), self.basis_dim(), "V * x dimension mismatch");
        let mut out = CMat::zeros(self.n, x.ncols());
        for (i, b) in self.blocks.iter().enumerate() {
            out += &**b * x.rows(i * self.p, self.p);
        }
        out
    }

    /// `V^H x` without materializing `V`.
    pub fn vh_mul(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.basis_dim(), x.ncols());
        for (i, b) in self.blocks.iter().enumerate() {
            out.rows_mut(i * self.p, self.p).copy_from(&(b.adjoint() * x));
        }
        out
    }

    /// `Z = V K`, the `n x jp` basis of the projection space.
    pub fn z(&self) -> CMat {
        self.v_mul(&self.k)
    }

    fn expand(&self, problem: &CheckedProblem, f: &ShiftedFactorization) -> Result<Expansion> {
        if self.closed {
            return Err(Error::InvalidArgument("the decomposition spans an invariant subspace".into()));
        }
        if f.order() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "factorization of order {} for a basis of {} rows",
                f.order(),
                self.n
            )));
        }
        let last = self.blocks.last().expect("at least one block");
        let mut w = f.solve(&problem.apply_eh(last));
        let scale = w.norm();
        let mut coef = CMat::zeros(self.basis_dim(), self.p);
        // Classical block Gram-Schmidt, applied twice.
        for _ in 0..2 {
            let c = self.vh_mul(&w);
            w -= self.v_mul(&c);
            coef += c;
        }
        Ok(Expansion {
            coef,
            remainder: w,
            scale,
        })
    }

    fn remainder_rank(e: &Expansion) -> usize {
        singular_values(&e.remainder)
            .iter()
            .filter(|&&s| s > RANK_TOL * e.scale)
            .count()
    }

    /// One rational Arnoldi step with pole `f.shift`, continuing from the last
    /// block of `V`.
    pub fn extend(&self, problem: &CheckedProblem, f: &ShiftedFactorization) -> Result<Self> {
        let e = self.expand(problem, f)?;
        let rank = Self::remainder_rank(&e);
        if rank < self.p {
            return Err(Error::Breakdown {
                block: self.j() + 1,
                rank,
                expected: self.p,
            });
        }
        let qr = thin_qr(&e.remainder);
        let p = self.p;
        let old = self.basis_dim();
        let rows = old + p;
        let cols = self.k.ncols() + p;
        let s = f.shift;

        let mut c = CMat::zeros(rows, p);
        c.rows_mut(0, old).copy_from(&e.coef);
        c.rows_mut(old, p).copy_from(&qr.r);
        let mut t = CMat::zeros(rows, p);
        t.view_mut((old - p, 0), (p, p)).fill_with_identity();
        let hcol = t + &c * s;

        let mut k = CMat::zeros(rows, cols);
        k.view_mut((0, 0), (old, self.k.ncols())).copy_from(&self.k);
        k.columns_mut(cols - p, p).copy_from(&c);
        let mut h = CMat::zeros(rows, cols);
        h.view_mut((0, 0), (old, self.h.ncols())).copy_from(&self.h);
        h.columns_mut(cols - p, p).copy_from(&hcol);

        log::debug!(
            "block {}: pole {s}, cond(K subdiagonal) = {:.3e}",
            self.j() + 1,
            cond2(&qr.r)
        );

        let mut vh_b = CMat::zeros(rows, self.vh_b.ncols());
        vh_b.rows_mut(0, old).copy_from(&self.vh_b);
        vh_b.rows_mut(old, p).copy_from(&(qr.q.adjoint() * problem.b()));

        let mut blocks = self.blocks.clone();
        blocks.push(Arc::new(qr.q));
        let mut poles = self.poles.clone();
        poles.push(s);
        Ok(Self {
            n: self.n,
            p,
            blocks,
            k,
            h,
            r0: self.r0.clone(),
            poles,
            vh_b,
            closed: false,
        })
    }

    /// Finishes a step whose new block lies entirely in `range(V)`: the column
    /// block is appended without a new basis block, leaving square `K`, `H`
    /// and `range(V K) = range(V)` invariant. Fails with `Breakdown` when the
    /// remainder is only partially dependent.
    pub fn close_invariant(&self, problem: &CheckedProblem, f: &ShiftedFactorization) -> Result<Self> {
        let e = self.expand(problem, f)?;
        let rank = Self::remainder_rank(&e);
        if rank != 0 {
            return Err(Error::Breakdown {
                block: self.j() + 1,
                rank,
                expected: self.p,
            });
        }
        let p = self.p;
        let rows = self.basis_dim();
        let cols = self.k.ncols() + p;
        let s = f.shift;
        let mut t = CMat::zeros(rows, p);
        t.view_mut((rows - p, 0), (p, p)).fill_with_identity();
        let hcol = t + &e.coef * s;
        let mut k = CMat::zeros(rows, cols);
        k.columns_mut(0, self.k.ncols()).copy_from(&self.k);
        k.columns_mut(cols - p, p).copy_from(&e.coef);
        let mut h = CMat::zeros(rows, cols);
        h.columns_mut(0, self.h.ncols()).copy_from(&self.h);
        h.columns_mut(cols - p, p).copy_from(&hcol);
        let mut poles = self.poles.clone();
        poles.push(s);
        Ok(Self {
            k,
            h,
            poles,
            closed: true,
            ..self.clone()
        })
    }

    /// Equivalent decomposition with orthonormal `K`: with `K = QR`,
    /// `K <- Q` and `H <- H R^{-1}`.
    pub fn orthonormalize_k(&self) -> Result<Self> {
        if self.k.ncols() == 0 {
            return Ok(self.clone());
        }
        let qr = thin_qr(&self.k);
        let diag: Vec<f64> = (0..qr.r.nrows()).map(|i| qr.r[(i, i)].re).collect();
        let hi = diag.iter().copied().fold(0.0, f64::max);
        let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
        if hi == 0.0 || lo < RANK_TOL * hi {
            return Err(Error::RankDeficient {
                ratio: if hi == 0.0 { 0.0 } else { lo / hi },
            });
        }
        // X R = H  <=>  R^H X^H = H^H
        let xh = qr
            .r
            .adjoint()
            .solve_lower_triangular(&self.h.adjoint())
            .ok_or(Error::RankDeficient { ratio: lo / hi })?;
        Ok(Self {
            k: qr.q,
            h: xh.adjoint(),
            ..self.clone()
        })
    }

    /// `||A^H V K - E^H V H||_F`, formed densely (testing aid).
    pub fn identity_residual(&self, problem: &CheckedProblem) -> f64 {
        let vk = self.z();
        let vh = self.v_mul(&self.h);
        (problem.a().adjoint_mul_dense(&vk) - problem.apply_eh(&vh)).norm()
    }
}

/// Builds the decomposition for a prefix of `shifts`, one factorization per
/// pole. Stops early at an invariant subspace.
pub fn build_sequence(problem: &CheckedProblem, shifts: &[Cplx]) -> Result<Vec<Brad>> {
    let mut out = vec![Brad::init(problem)?];
    for &s in shifts {
        let f = crate::kernels::make_shifted_factorization(problem.a(), problem.e(), s)?;
        let cur = out.last().expect("nonempty");
        match cur.extend(problem, &f) {
            Ok(next) => out.push(next),
            Err(Error::Breakdown { rank: 0, .. }) => {
                out.push(cur.close_invariant(problem, &f)?);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
