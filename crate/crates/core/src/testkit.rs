//! Seeded random instances and dense reference quantities for tests and
//! benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernels::DenseLu;
use crate::problem::{CareProblem, CheckedProblem};
use crate::shifts::ShiftSequence;
use crate::sparse::SparseMatrix;
use crate::{CMat, Cplx, Result};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug)]
pub struct RandomSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    /// Complex entries in `A`, `B`, `C`.
    pub complex: bool,
    /// Add a random SPD tridiagonal `E`.
    pub generalized: bool,
}

impl RandomSpec {
    pub fn new(n: usize, m: usize, p: usize) -> Self {
        Self {
            n,
            m,
            p,
            complex: false,
            generalized: false,
        }
    }
}

fn entry(rng: &mut impl Rng, complex: bool) -> Cplx {
    let re = rng.random::<f64>() * 2.0 - 1.0;
    let im = if complex { rng.random::<f64>() * 2.0 - 1.0 } else { 0.0 };
    Cplx::new(re, im)
}

/// Sparse banded `A` with diagonal in `[-100, -1]` and off-diagonal row sums
/// below one, so every Gershgorin disc lies in the left half plane.
pub fn random_stable_matrix(rng: &mut impl Rng, n: usize, complex: bool) -> SparseMatrix {
    let mut trips = Vec::new();
    for i in 0..n {
        let d = -(10f64.powf(2.0 * rng.random::<f64>()));
        trips.push((i, i, Cplx::new(d, 0.0)));
        for off in [1usize, 2] {
            for (r, c) in [(i, i + off), (i + off, i)] {
                if c < n && r < n {
                    trips.push((r, c, entry(rng, complex) * 0.24));
                }
            }
        }
    }
    SparseMatrix::from_triplets(n, n, trips).expect("indices in range")
}

/// SPD tridiagonal `E` with diagonal in `[2, 3]` and off-diagonals in
/// `[-0.5, 0.5]`.
pub fn random_spd_tridiagonal(rng: &mut impl Rng, n: usize) -> SparseMatrix {
    let mut trips = Vec::new();
    for i in 0..n {
        trips.push((i, i, Cplx::new(2.0 + rng.random::<f64>(), 0.0)));
        if i + 1 < n {
            let v = Cplx::new(rng.random::<f64>() - 0.5, 0.0);
            trips.push((i, i + 1, v));
            trips.push((i + 1, i, v));
        }
    }
    SparseMatrix::from_triplets(n, n, trips).expect("indices in range")
}

pub fn random_dense(rng: &mut impl Rng, rows: usize, cols: usize, complex: bool) -> CMat {
    CMat::from_fn(rows, cols, |_, _| entry(rng, complex))
}

pub fn random_stable_problem(rng: &mut impl Rng, spec: RandomSpec) -> Result<CheckedProblem> {
    let a = random_stable_matrix(rng, spec.n, spec.complex);
    let e = spec.generalized.then(|| random_spd_tridiagonal(rng, spec.n));
    let b = random_dense(rng, spec.n, spec.m, spec.complex);
    let c = random_dense(rng, spec.p, spec.n, spec.complex);
    CareProblem::new(a, e, b, c).validate()
}

/// `count` distinct real poles, log-uniform in `[1, 100]`.
pub fn random_shifts(rng: &mut impl Rng, count: usize) -> Result<ShiftSequence> {
    let poles: Vec<f64> = (0..count).map(|_| 10f64.powf(2.0 * rng.random::<f64>())).collect();
    ShiftSequence::from_real(&poles)
}

/// A stable problem for which the shift `0` makes `H^H K` singular while
/// `K^H K` stays invertible. The leading block of `A` is `[-1 10; 0 -1]`
/// and `C = e1 + t e2` with `t^2 + 10 t + 1 = 0`.
pub fn zero_shift_problem(n: usize) -> CareProblem {
    let c = |v: f64| Cplx::new(v, 0.0);
    let mut r = rng(26);
    let t = -5.0 + 24f64.sqrt();
    let mut trips = vec![(0, 0, c(-1.0)), (0, 1, c(10.0)), (1, 1, c(-1.0))];
    for i in 2..n {
        trips.push((i, i, c(-2.0 - i as f64)));
        trips.push((0, i, c(0.3)));
        trips.push((1, i, c(-0.2)));
        if i + 1 < n {
            trips.push((i, i + 1, c(0.5)));
        }
    }
    let a = SparseMatrix::from_triplets(n, n, trips).expect("valid triplets");
    let mut cm = CMat::zeros(1, n);
    cm[(0, 0)] = c(1.0);
    cm[(0, 1)] = c(t);
    CareProblem::new(a, None, random_dense(&mut r, n, 1, false), cm)
}

/// Dense stable matrix of order `d` for the small Riccati solvers: a random
/// matrix shifted left past its spectral abscissa.
pub fn random_stable_dense(rng: &mut impl Rng, d: usize, complex: bool) -> Result<CMat> {
    let m = random_dense(rng, d, d, complex);
    let abscissa = crate::kernels::eigenvalues(&m)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = 0.1 + rng.random::<f64>();
    Ok(m - CMat::identity(d, d) * Cplx::new(abscissa + margin, 0.0))
}

/// `Z (W^H Z)^{-1} W^H`, the projector onto `range(Z)` along `range(W)^⊥`.
pub fn oblique_projector(z: &CMat, w: &CMat) -> Result<CMat> {
    let lu = DenseLu::new(&(w.adjoint() * z))?;
    Ok(z * lu.solve(&w.adjoint())?)
}

/// Number of singular values above `rel` times the largest.
pub fn numerical_rank_rel(m: &CMat, rel: f64) -> usize {
    let s = crate::kernels::singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&v| v > rel * top).count()
}
