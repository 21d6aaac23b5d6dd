//! Pole sequences for the rational Krylov space.
//!
//! A pole `s` is used through `(A^H - s E^H)^{-1}`, so for a stable `A` the
//! poles must avoid the left half-plane spectrum. ADI-style shift lists (which
//! live in the left half-plane) are mapped to poles by `s -> -conj(s)`, see
//! [`ShiftSequence::mirrored`].

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernels::make_shifted_factorization;
use crate::problem::CheckedProblem;
use crate::{CMat, Cplx, Error, Result};

/// Relative distance under which two shifts count as equal.
pub const DUPLICATE_TOL: f64 = 1e-14;

/// Seed for the heuristic's random start vectors.
pub const DEFAULT_SEED: u64 = 0x5eed_0001;

/// Spectral bounds fall back to this interval when the estimates fail.
pub const FALLBACK_BOUNDS: (f64, f64) = (1.0, 1e6);

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftSequence {
    shifts: Vec<Cplx>,
    conjugate_closed: bool,
}

fn close(a: Cplx, b: Cplx, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm())
}

fn check_finite(values: &[Cplx]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyList);
    }
    if let Some(k) = values.iter().position(|s| !s.re.is_finite() || !s.im.is_finite()) {
        return Err(Error::InfiniteShift(k));
    }
    Ok(())
}

fn conjugate_closed(values: &[Cplx]) -> bool {
    let mut used = vec![false; values.len()];
    for (i, s) in values.iter().enumerate() {
        if s.im == 0.0 || used[i] {
            continue;
        }
        let partner = (0..values.len()).find(|&k| k != i && !used[k] && close(values[k], s.conj(), 1e-12));
        match partner {
            Some(k) => {
                used[i] = true;
                used[k] = true;
            }
            None => return false,
        }
    }
    true
}

impl ShiftSequence {
    /// Keeps the given order. Coinciding shifts are rejected.
    pub fn from_list(values: Vec<Cplx>) -> Result<Self> {
        check_finite(&values)?;
        for i in 0..values.len() {
            for k in (i + 1)..values.len() {
                if close(values[i], values[k], DUPLICATE_TOL) {
                    return Err(Error::DuplicateShift { first: i, second: k });
                }
            }
        }
        Ok(Self::from_list_unchecked(values))
    }

    /// Like [`from_list`](Self::from_list) but repeated shifts are allowed.
    pub fn with_repeats(values: Vec<Cplx>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Self::from_list_unchecked(values))
    }

    fn from_list_unchecked(values: Vec<Cplx>) -> Self {
        let conjugate_closed = conjugate_closed(&values);
        Self {
            shifts: values,
            conjugate_closed,
        }
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_list(values.iter().map(|&v| Cplx::new(v, 0.0)).collect())
    }

    /// `s -> -conj(s)` applied to every entry.
    pub fn mirrored(&self) -> Self {
        Self::from_list_unchecked(self.shifts.iter().map(|s| -s.conj()).collect())
    }

    pub fn shifts(&self) -> &[Cplx] {
        &self.shifts
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn is_conjugate_closed(&self) -> bool {
        self.conjugate_closed
    }

    pub fn is_real(&self) -> bool {
        self.shifts.iter().all(|s| s.im == 0.0)
    }

    /// Parses either a JSON array (numbers, `[re, im]` pairs or
    /// `{"re": .., "im": ..}` objects) or one shift per line as `re [im]`.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str, allow_repeats: bool) -> Result<Self> {
        let values = if text.trim_start().starts_with('[') {
            parse_json_shifts(text)?
        } else {
            parse_line_shifts(text)?
        };
        if allow_repeats {
            Self::with_repeats(values)
        } else {
            Self::from_list(values)
        }
    }

    pub fn load(path: impl AsRef<Path>, allow_repeats: bool) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, allow_repeats)
    }
}

fn parse_line_shifts(text: &str) -> Result<Vec<Cplx>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = t
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: k + 1,
                msg: format!("bad shift: {e}"),
            })?;
        match nums.as_slice() {
            [re] => out.push(Cplx::new(*re, 0.0)),
            [re, im] => out.push(Cplx::new(*re, *im)),
            _ => {
                return Err(Error::Parse {
                    line: k + 1,
                    msg: "expected 're' or 're im'".into(),
                })
            }
        }
    }
    Ok(out)
}

fn parse_json_shifts(text: &str) -> Result<Vec<Cplx>> {
    use serde_json::Value;
    let bad = |k: usize| Error::Parse {
        line: 1,
        msg: format!("shift entry {k} is neither a number, a [re, im] pair nor a {{re, im}} object"),
    };
    let items: Vec<Value> = serde_json::from_str(text)?;
    items
        .iter()
        .enumerate()
        .map(|(k, v)| match v {
            Value::Number(x) => x.as_f64().map(|re| Cplx::new(re, 0.0)).ok_or_else(|| bad(k)),
            Value::Array(pair) if pair.len() == 2 => match (pair[0].as_f64(), pair[1].as_f64()) {
                (Some(re), Some(im)) => Ok(Cplx::new(re, im)),
                _ => Err(bad(k)),
            },
            Value::Object(o) => {
                let re = o.get("re").and_then(Value::as_f64).ok_or_else(|| bad(k))?;
                let im = o.get("im").and_then(Value::as_f64).unwrap_or(0.0);
                Ok(Cplx::new(re, im))
            }
            _ => Err(bad(k)),
        })
        .collect()
}

/// Estimates `(a, b)`: the smallest and largest eigenvalue magnitudes of
/// `E^{-1} A`. Each bound is the extremal Ritz value magnitude of an Arnoldi
/// process (on `E^{-1}A` and on `(A^H)^{-1}E^H` respectively) started from a
/// seeded random vector. It stops when consecutive estimates agree to `1e-3`
/// relative or the Krylov space becomes invariant; more than `max_iter` steps
/// give [`Error::EstimateFailure`].
pub fn estimate_spectral_bounds(problem: &CheckedProblem, seed: u64, max_iter: usize) -> Result<(f64, f64)> {
    let n = problem.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = || {
        CMat::from_fn(n, 1, |_, _| Cplx::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    };

    let largest = arnoldi_extremal_magnitude(start(), max_iter, |x| problem.solve_e(&problem.a().mul_dense(x)))
        .ok_or_else(|| Error::EstimateFailure("largest eigenvalue magnitude".into()))?;

    // (A^H)^{-1} E^H has eigenvalue magnitudes 1/|λ(E^{-1}A)|.
    let f = make_shifted_factorization(problem.a(), problem.e(), Cplx::new(0.0, 0.0))
        .map_err(|e| Error::EstimateFailure(format!("A is singular: {e}")))?;
    let inv = arnoldi_extremal_magnitude(start(), max_iter, |x| f.solve(&problem.apply_eh(x)))
        .ok_or_else(|| Error::EstimateFailure("smallest eigenvalue magnitude".into()))?;
    let mut smallest = 1.0 / inv;
    let mut largest = largest;
    if problem.e().is_none() {
        largest = largest.min(problem.a().norm_inf());
    }
    if smallest > largest {
        std::mem::swap(&mut smallest, &mut largest);
    }
    if !(smallest > 0.0 && largest.is_finite()) {
        return Err(Error::EstimateFailure(format!("degenerate bounds [{smallest}, {largest}]")));
    }
    Ok((smallest, largest))
}

/// Largest Ritz value magnitude of `op` from an Arnoldi process.
fn arnoldi_extremal_magnitude(x: CMat, max_iter: usize, op: impl Fn(&CMat) -> CMat) -> Option<f64> {
    let n = x.nrows();
    let nx = x.norm();
    if nx == 0.0 {
        return None;
    }
    let steps = max_iter.min(n);
    let mut basis: Vec<CMat> = vec![x / Cplx::new(nx, 0.0)];
    let mut h = CMat::zeros(steps + 1, steps);
    let mut prev = f64::NAN;
    for k in 0..steps {
        let mut w = op(&basis[k]);
        if !w.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return None;
        }
        let scale = w.norm();
        for _ in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let coef = (v.adjoint() * &w)[(0, 0)];
                h[(i, k)] += coef;
                w -= v * coef;
            }
        }
        let beta = w.norm();
        h[(k + 1, k)] = Cplx::new(beta, 0.0);
        let ritz = crate::kernels::eigenvalues(&h.view((0, 0), (k + 1, k + 1)).into_owned()).ok()?;
        let est = ritz.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let invariant = beta <= 1e-12 * scale;
        if invariant || k + 1 == n || (est - prev).abs() <= 1e-3 * est {
            return Some(est);
        }
        prev = est;
        basis.push(w / Cplx::new(beta, 0.0));
    }
    None
}

/// `count` points log-spaced in `[a, b]`, ordered so that every prefix spreads
/// over the interval (greedy Leja ordering in `log` scale, starting at `a`).
pub fn log_spaced_poles(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![(a * b).sqrt()];
    }
    let (la, lb) = (a.ln(), b.ln());
    let pts: Vec<f64> = (0..count)
        .map(|k| la + (lb - la) * k as f64 / (count - 1) as f64)
        .collect();
    let mut order = vec![0usize];
    let mut left: Vec<usize> = (1..count).collect();
    while !left.is_empty() {
        let (pos, _) = left
            .iter()
            .enumerate()
            .map(|(pos, &k)| {
                let score: f64 = order.iter().map(|&o| (pts[k] - pts[o]).abs().max(1e-300).ln()).sum();
                (pos, score)
            })
            .fold((0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
        order.push(left.remove(pos));
    }
    order
        .into_iter()
        .map(|k| if k == 0 { a } else if k == count - 1 { b } else { pts[k].exp() })
        .collect()
}

/// `count` real positive poles log-spaced between the estimated smallest and
/// largest eigenvalue magnitudes of `E^{-1}A` (the mirror image of a stable
/// spectrum). Falls back to [`FALLBACK_BOUNDS`] with a warning when the
/// estimates fail.
pub fn heuristic_shifts(problem: &CheckedProblem, count: usize, seed: u64) -> Result<ShiftSequence> {
    if count == 0 {
        return Err(Error::EmptyList);
    }
    let (a, b) = match estimate_spectral_bounds(problem, seed, 100) {
        Ok(bounds) => bounds,
        Err(e) => {
            log::warn!("{e}; using poles in [{}, {}]", FALLBACK_BOUNDS.0, FALLBACK_BOUNDS.1);
            FALLBACK_BOUNDS
        }
    };
    log::debug!("heuristic pole interval [{a:.6e}, {b:.6e}]");
    let poles = log_spaced_poles(a, b, count);
    ShiftSequence::with_repeats(poles.into_iter().map(|v| Cplx::new(v, 0.0)).collect())
}
