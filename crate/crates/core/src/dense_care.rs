//! Small dense Riccati and Lyapunov solvers.
//!
//! The Riccati solver takes the stable invariant subspace of the Hamiltonian
//! matrix from an ordered Schur form. Newton-Kleinman with the Lyapunov solver
//! below gives an independent second route, used for cross-checks and for
//! optional refinement.

use nalgebra::DVector;

use crate::kernels::{cond2, eigenvalues, hermitian_part, ordered_schur, schur, DenseLu};
use crate::{CMat, Cplx, Error, Result};

/// Largest order accepted by [`solve_care_dense`] by default.
pub const DEFAULT_CARE_CAP: usize = 2000;

/// Hamiltonian eigenvalues this close to the imaginary axis (relative to the
/// Hamiltonian's norm) rule out a stabilizing solution.
pub const IMAG_AXIS_TOL: f64 = 1e-10;

/// Largest admissible condition number of `U1`.
pub const U1_COND_MAX: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SolveReport {
    Accurate,
    IllConditioned,
}

#[derive(Clone, Debug)]
pub struct DenseCareSolution {
    /// Hermitian.
    pub y: CMat,
    /// Eigenvalues of `A - B B^H Y`.
    pub closed_loop_spectrum: Vec<Cplx>,
    pub report: SolveReport,
}

#[derive(Clone, Copy, Debug)]
pub struct DenseCareOptions {
    pub cap: usize,
    /// Newton steps applied after the Schur solve.
    pub refine: usize,
}

impl Default for DenseCareOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CARE_CAP,
            refine: 0,
        }
    }
}

/// `A^H Y + Y A + C^H C - Y B B^H Y`
pub fn care_residual(a: &CMat, b: &CMat, c: &CMat, y: &CMat) -> CMat {
    let yb = y * b;
    a.adjoint() * y + y * a + c.adjoint() * c - &yb * yb.adjoint()
}

/// Stabilizing solution of `A^H Y + Y A + C^H C - Y B B^H Y = 0`.
pub fn solve_care_dense(a: &CMat, b: &CMat, c: &CMat) -> Result<DenseCareSolution> {
    solve_care_dense_with(a, b, c, &DenseCareOptions::default())
}

pub fn solve_care_dense_with(a: &CMat, b: &CMat, c: &CMat, opts: &DenseCareOptions) -> Result<DenseCareSolution> {
    let d = a.nrows();
    if a.ncols() != d || b.nrows() != d || c.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "A {}x{}, B {}x{}, C {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    if d > opts.cap {
        return Err(Error::CapExceeded { n: d, cap: opts.cap });
    }
    if d == 0 {
        return Ok(DenseCareSolution {
            y: CMat::zeros(0, 0),
            closed_loop_spectrum: Vec::new(),
            report: SolveReport::Accurate,
        });
    }

    let mut ham = CMat::zeros(2 * d, 2 * d);
    ham.view_mut((0, 0), (d, d)).copy_from(a);
    ham.view_mut((0, d), (d, d)).copy_from(&-(b * b.adjoint()));
    ham.view_mut((d, 0), (d, d)).copy_from(&-(c.adjoint() * c));
    ham.view_mut((d, d), (d, d)).copy_from(&-a.adjoint());

    let axis_tol = IMAG_AXIS_TOL * ham.norm();
    let s = ordered_schur(&ham, |z| z.re < 0.0)?;
    let near_axis = (0..2 * d).any(|i| s.t[(i, i)].re.abs() <= axis_tol);
    if s.selected != d || near_axis {
        return Err(Error::NoStabilizingSolution {
            stable: (0..2 * d).filter(|&i| s.t[(i, i)].re < -axis_tol).count(),
            expected: d,
        });
    }
    let u1 = s.q.view((0, 0), (d, d)).into_owned();
    let u2 = s.q.view((d, 0), (d, d)).into_owned();
    let cond = cond2(&u1);
    if cond > U1_COND_MAX {
        return Err(Error::IllConditionedU1(cond));
    }
    // Y U1 = U2  <=>  U1^H Y^H = U2^H
    let yh = DenseLu::new(&u1)?.solve_adjoint(&u2.adjoint())?;
    let mut y = hermitian_part(&yh.adjoint());

    for _ in 0..opts.refine {
        match newton_step(a, b, c, &y) {
            Ok(next) => y = next,
            Err(e) => {
                log::debug!("Newton refinement stopped: {e}");
                break;
            }
        }
    }

    let closed_loop_spectrum = eigenvalues(&(a - b * (b.adjoint() * &y)))?;
    let report = if closed_loop_spectrum.iter().all(|z| z.re < 0.0) {
        SolveReport::Accurate
    } else {
        SolveReport::IllConditioned
    };
    Ok(DenseCareSolution {
        y,
        closed_loop_spectrum,
        report,
    })
}

/// One Newton-Kleinman step from `y`.
fn newton_step(a: &CMat, b: &CMat, c: &CMat, y: &CMat) -> Result<CMat> {
    let yb = y * b;
    let f = a - b * yb.adjoint();
    let w = c.adjoint() * c + &yb * yb.adjoint();
    solve_lyapunov_dense(&f, &w)
}

/// Solves `F^H P + P F + W = 0` by the complex Bartels-Stewart method.
pub fn solve_lyapunov_dense(f: &CMat, w: &CMat) -> Result<CMat> {
    let d = f.nrows();
    if f.ncols() != d || w.nrows() != d || w.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "F {}x{}, W {}x{}",
            f.nrows(),
            f.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    if d == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let (q, t) = schur(f)?;
    // T^H P~ + P~ T = -W~ with P~ = Q^H P Q.
    let wt = q.adjoint() * w * &q;
    let tol = 1e2 * f64::EPSILON * t.norm().max(f64::MIN_POSITIVE);
    let mut p = CMat::zeros(d, d);
    for k in 0..d {
        // (T^H + T_kk I) p_k = -w_k - sum_{i<k} T_ik p_i
        let mut rhs: DVector<Cplx> = -wt.column(k).into_owned();
        for i in 0..k {
            let tik = t[(i, k)];
            if tik != Cplx::new(0.0, 0.0) {
                rhs -= p.column(i) * tik;
            }
        }
        let tkk = t[(k, k)];
        for i in 0..d {
            let mut acc = rhs[i];
            for l in 0..i {
                acc -= t[(l, i)].conj() * p[(l, k)];
            }
            let diag = t[(i, i)].conj() + tkk;
            if diag.norm() <= tol {
                return Err(Error::SpectrumCollision(t[(i, i)], tkk));
            }
            p[(i, k)] = acc / diag;
        }
    }
    Ok(hermitian_part(&(&q * p * q.adjoint())))
}

/// Newton-Kleinman iteration from `Y_0 = 0` (so `A` must be stable). Stops
/// after `iters` steps or when the relative CARE residual drops below `1e-12`.
pub fn newton_kleinman_oracle(a: &CMat, b: &CMat, c: &CMat, iters: usize) -> Result<CMat> {
    let d = a.nrows();
    let scale = (c.adjoint() * c).norm().max(1.0);
    let mut y = CMat::zeros(d, d);
    for _ in 0..iters {
        y = newton_step(a, b, c, &y)?;
        if care_residual(a, b, c, &y).norm() <= 1e-12 * scale {
            break;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> CMat {
        CMat::from_element(1, 1, Cplx::new(v, 0.0))
    }

    #[test]
    fn scalar_care() {
        let sol = solve_care_dense(&s(-1.0), &s(1.0), &s(1.0)).unwrap();
        assert!((sol.y[(0, 0)].re - (2f64.sqrt() - 1.0)).abs() < 1e-14);
        assert!((sol.closed_loop_spectrum[0] + Cplx::new(2f64.sqrt(), 0.0)).norm() < 1e-14);
        assert_eq!(sol.report, SolveReport::Accurate);
    }

    #[test]
    fn zero_c_gives_zero() {
        let a = CMat::from_row_slice(2, 2, &[Cplx::new(-1.0, 0.0), Cplx::new(3.0, 1.0), Cplx::new(0.0, 0.0), Cplx::new(-2.0, 0.0)]);
        let b = CMat::from_element(2, 1, Cplx::new(1.0, 0.0));
        let sol = solve_care_dense(&a, &b, &CMat::zeros(1, 2)).unwrap();
        assert!(sol.y.norm() < 1e-14);
    }

    #[test]
    fn imaginary_axis_is_rejected() {
        // A = 0, B = 0: Hamiltonian eigenvalues are all zero.
        let err = solve_care_dense(&s(0.0), &s(0.0), &s(1.0)).unwrap_err();
        assert!(matches!(err, Error::NoStabilizingSolution { .. }));
    }

    #[test]
    fn lyapunov_examples() {
        let p = solve_lyapunov_dense(&s(-1.0), &s(2.0)).unwrap();
        assert!((p[(0, 0)].re - 1.0).abs() < 1e-15);
        let f = CMat::from_diagonal(&DVector::from_vec(vec![Cplx::new(-1.0, 0.0), Cplx::new(-2.0, 0.0)]));
        let p = solve_lyapunov_dense(&f, &CMat::identity(2, 2)).unwrap();
        assert!((p[(0, 0)].re - 0.5).abs() < 1e-15 && (p[(1, 1)].re - 0.25).abs() < 1e-15);
        assert!(p[(0, 1)].norm() < 1e-15);
        assert!(matches!(solve_lyapunov_dense(&s(0.0), &s(1.0)), Err(Error::SpectrumCollision(..))));
    }

    #[test]
    fn newton_kleinman_examples() {
        let y = newton_kleinman_oracle(&s(-1.0), &s(1.0), &s(1.0), 8).unwrap();
        assert!((y[(0, 0)].re - (2f64.sqrt() - 1.0)).abs() < 1e-14);
        let y = newton_kleinman_oracle(&s(-3.0), &s(1.0), &s(0.0), 1).unwrap();
        assert_eq!(y[(0, 0)], Cplx::new(0.0, 0.0));
    }
}
