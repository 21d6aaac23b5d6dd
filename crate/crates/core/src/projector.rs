//! Oblique projection of the Riccati equation onto `range(V K)` and the outer
//! iteration.
//!
//! For a test basis `L` with `L^H K` nonsingular the reduced equation
//! `A_j^H Y + Y A_j + C_j^H C_j - Y B_j B_j^H Y = 0` uses
//!
//! ```text
//! A_j = H^H L (K^H L)^{-1},   B_j = K^H V^H B,   C_j = C̃^H L (K^H L)^{-1}.
//! ```
//!
//! `L^H K` is factorized once per step and applied to `L^H H` and `L^H C̃`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::brad::Brad;
use crate::dense_care::{solve_care_dense_with, DenseCareOptions, DenseCareSolution};
use crate::kernels::{
    hermitian_part, make_shifted_factorization, numerical_rank, singular_values, thin_qr, DenseLu, RANK_TOL,
};
use crate::problem::CheckedProblem;
use crate::residual::{residual_norm_with, ResidualNorm};
use crate::shifts::ShiftSequence;
use crate::truncation::{truncate, truncated_residual_norm, TruncatedSolution, TruncationPolicy};
use crate::{CMat, Cplx, Error, Result, DENSE_CAP};

/// `L^H K` counts as singular above this scaled condition number.
pub const LTK_COND_MAX: f64 = 1e14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProjectorChoice {
    /// `L = K`
    GalerkinK,
    /// `L = H`
    PetrovH,
    /// `L = αH - βK`
    Combo { alpha: Cplx, beta: Cplx },
}

impl ProjectorChoice {
    pub fn validate(&self) -> Result<()> {
        if let Self::Combo { alpha, beta } = self {
            if alpha.norm() + beta.norm() == 0.0 {
                return Err(Error::InvalidArgument("combo projector needs |alpha| + |beta| > 0".into()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ProjectorChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GalerkinK => write!(f, "K"),
            Self::PetrovH => write!(f, "H"),
            Self::Combo { alpha, beta } => write!(f, "combo:{},{}", Coef(*alpha), Coef(*beta)),
        }
    }
}

/// Real coefficients print without an imaginary part.
struct Coef(Cplx);

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.im == 0.0 {
            write!(f, "{}", self.0.re)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for ProjectorChoice {
    type Err = Error;

    /// `K`, `H`, or `combo:ALPHA,BETA` with complex numbers such as `1`,
    /// `-0.5` or `1+2i`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let choice = match t {
            "K" | "k" => Self::GalerkinK,
            "H" | "h" => Self::PetrovH,
            _ => {
                let rest = t
                    .strip_prefix("combo:")
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown projector '{s}'")))?;
                let (a, b) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::InvalidArgument(format!("combo projector '{s}' needs ALPHA,BETA")))?;
                let parse = |v: &str| {
                    Cplx::from_str(v.trim()).map_err(|_| Error::InvalidArgument(format!("bad complex number '{v}'")))
                };
                Self::Combo {
                    alpha: parse(a)?,
                    beta: parse(b)?,
                }
            }
        };
        choice.validate()?;
        Ok(choice)
    }
}

impl Serialize for ProjectorChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ProjectorChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The test basis `L` for `choice`.
pub fn build_l(brad: &Brad, choice: ProjectorChoice) -> Result<CMat> {
    choice.validate()?;
    if brad.k().ncols() == 0 {
        return Err(Error::InvalidArgument("the decomposition has no completed step".into()));
    }
    Ok(match choice {
        ProjectorChoice::GalerkinK => brad.k().clone(),
        ProjectorChoice::PetrovH => brad.h().clone(),
        ProjectorChoice::Combo { alpha, beta } => brad.h() * alpha - brad.k() * beta,
    })
}

/// Reduced Riccati data of one step.
#[derive(Clone, Debug)]
pub struct ProjectedCare {
    pub aj: CMat,
    pub bj: CMat,
    pub cj: CMat,
    pub l: CMat,
    /// `||L|| ||K|| / σ_min(L^H K)`, the norm bound of the oblique projector.
    pub cond_ltk: f64,
    /// Triangular factor of `K = Q_K R_K`, used to balance the reduced solve.
    pub r_k: CMat,
}

/// Forms `A_j`, `B_j`, `C_j` for the test basis `l`.
pub fn project(brad: &Brad, l: &CMat) -> Result<ProjectedCare> {
    let k = brad.k();
    if l.shape() != k.shape() {
        return Err(Error::DimensionMismatch(format!("L is {:?}, K is {:?}", l.shape(), k.shape())));
    }
    let g = l.adjoint() * k;
    let sg = singular_values(&g);
    let smin = sg.last().copied().unwrap_or(0.0);
    let scale = singular_values(l).first().copied().unwrap_or(0.0) * singular_values(k).first().copied().unwrap_or(0.0);
    let cond_ltk = if smin > 0.0 { scale / smin } else { f64::INFINITY };
    if !(cond_ltk <= LTK_COND_MAX) {
        return Err(Error::SingularLtK(cond_ltk));
    }
    let lu = DenseLu::new(&g)?;
    let aj = lu.solve(&(l.adjoint() * brad.h()))?.adjoint();
    let cj = lu.solve(&(l.adjoint() * brad.ctilde()))?.adjoint();
    let bj = k.adjoint() * brad.vh_b();

    let p = cj.nrows();
    if numerical_rank(&cj, RANK_TOL) < p {
        log::warn!("reduced C_j is numerically rank deficient");
    }
    if numerical_rank(&bj, RANK_TOL) < bj.nrows().min(bj.ncols()) {
        log::warn!("reduced B_j is numerically rank deficient");
    }
    Ok(ProjectedCare {
        aj,
        bj,
        cj,
        l: l.clone(),
        cond_ltk,
        r_k: thin_qr(k).r,
    })
}

/// Stabilizing solution of the reduced equation.
///
/// The columns of `K` shrink roughly like `1/|s_i|`, which makes `Y` badly
/// scaled. The equation is solved for `Ŷ = R_K Y R_K^H` instead, with
/// `Â = R_K^{-H} A_j R_K^H`, `B̂ = R_K^{-H} B_j`, `Ĉ = C_j R_K^H`, and mapped
/// back.
pub fn solve_step(projected: &ProjectedCare, opts: &DenseCareOptions) -> Result<DenseCareSolution> {
    let r = &projected.r_k;
    let rh = r.adjoint();
    // R^{-H} M = (M^H R^{-1})^H, and R^{-1} is applied as a triangular solve.
    let left = |m: &CMat| -> Result<CMat> {
        rh.solve_lower_triangular(m)
            .ok_or(Error::RankDeficient { ratio: 0.0 })
    };
    let a_hat = left(&(&projected.aj * &rh))?;
    let b_hat = left(&projected.bj)?;
    let c_hat = &projected.cj * &rh;
    let mut sol = solve_care_dense_with(&a_hat, &b_hat, &c_hat, opts)?;
    // Y = R^{-1} Ŷ R^{-H}
    let t = r.solve_upper_triangular(&sol.y).ok_or(Error::RankDeficient { ratio: 0.0 })?;
    let y = r.solve_upper_triangular(&t.adjoint()).ok_or(Error::RankDeficient { ratio: 0.0 })?;
    sol.y = hermitian_part(&y.adjoint());
    Ok(sol)
}

/// `X = Z Y Z^H` with `Z = V K`.
#[derive(Clone, Debug)]
pub struct LowRankSolution {
    pub brad: Arc<Brad>,
    pub y: CMat,
}

impl LowRankSolution {
    pub fn z(&self) -> CMat {
        self.brad.z()
    }

    pub fn rank(&self) -> usize {
        self.y.nrows()
    }

    /// Dense `X`; refused above the dense cap.
    pub fn x_dense(&self) -> Result<CMat> {
        let n = self.brad.n();
        if n > DENSE_CAP {
            return Err(Error::CapExceeded { n, cap: DENSE_CAP });
        }
        let z = self.z();
        Ok(&z * &self.y * z.adjoint())
    }
}

/// How the relative residual is normalized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Denominator {
    /// `||C C^H||_F` (equal to `||C^H C||_F`).
    #[default]
    Cch,
    /// No normalization.
    Absolute,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunOptions {
    pub tol: f64,
    /// At most this many completed steps; `None` uses every shift.
    pub max_blocks: Option<usize>,
    pub truncate: bool,
    pub policy: TruncationPolicy,
    pub norm: ResidualNorm,
    pub denominator: Denominator,
    /// Work with the equivalent decomposition whose `K` is orthonormal.
    pub orthonormalize_k: bool,
    /// Newton steps applied after each reduced Schur solve.
    pub refine: usize,
}

/// One Newton step after the Schur solve removes most of its rounding error.
pub const DEFAULT_REFINE: usize = 1;

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_blocks: None,
            truncate: false,
            policy: TruncationPolicy::default(),
            norm: ResidualNorm::Frobenius,
            denominator: Denominator::Cch,
            orthonormalize_k: false,
            refine: DEFAULT_REFINE,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {} must be positive", self.tol)));
        }
        if self.max_blocks == Some(0) {
            return Err(Error::InvalidArgument("max_blocks must be at least 1".into()));
        }
        TruncationPolicy::new(self.policy.tau)?;
        Ok(())
    }
}

/// How a history row came about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Evaluated,
    /// The reduced equation had no stabilizing solution; the previous iterate stands.
    Kept,
    /// Projection or reduced solve failed.
    Failed,
    /// The shift could not be used.
    Skipped,
    /// The decomposition could not be extended.
    Stopped,
}

/// One row of the convergence history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub j: usize,
    pub status: StepStatus,
    /// Columns of `K` (`jp` unless the subspace closed).
    pub dim: usize,
    pub shift_re: f64,
    pub shift_im: f64,
    pub residual: Option<f64>,
    pub rel_residual: Option<f64>,
    /// Rank kept by truncation.
    pub r: Option<usize>,
    pub trunc_residual: Option<f64>,
    pub trunc_rel_residual: Option<f64>,
    pub cond_ltk: Option<f64>,
    pub seconds: f64,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceHistory {
    pub records: Vec<StepRecord>,
}

impl ConvergenceHistory {
    pub fn last_evaluated(&self) -> Option<&StepRecord> {
        self.records.iter().rev().find(|r| r.rel_residual.is_some())
    }
}

/// Which final candidate is reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Candidate {
    Untruncated,
    Truncated,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub choice: ProjectorChoice,
    pub solution: Option<LowRankSolution>,
    pub truncated: Option<TruncatedSolution>,
    /// The candidate with the smaller final residual.
    pub selected: Candidate,
    pub history: ConvergenceHistory,
    pub converged: bool,
    /// The decomposition of the last evaluated step.
    pub brad: Option<Arc<Brad>>,
}

impl RunResult {
    /// `(Z, Y)` of the selected candidate: `X = Z Y Z^H`.
    pub fn factors(&self) -> Option<(CMat, CMat)> {
        let brad = self.brad.as_ref()?;
        match (self.selected, &self.truncated, &self.solution) {
            (Candidate::Truncated, Some(t), _) => Some((t.z_hat(brad), t.y_hat_matrix())),
            (_, _, Some(s)) => Some((s.z(), s.y.clone())),
            _ => None,
        }
    }
}

/// What the decomposition stream produces for each shift.
#[derive(Clone, Debug)]
pub enum BradEvent {
    Step(Arc<Brad>),
    Skipped { shift: Cplx, reason: String },
    Stopped { shift: Cplx, reason: String },
}

/// Lazily extends a decomposition along a shift list. Shifts whose
/// factorization fails are skipped; a breakdown ends the stream, except that
/// an exactly invariant subspace is closed off as a final step.
pub struct BradStream<'a> {
    problem: &'a CheckedProblem,
    shifts: &'a [Cplx],
    next: usize,
    current: Arc<Brad>,
    done: bool,
}

impl<'a> BradStream<'a> {
    pub fn new(problem: &'a CheckedProblem, shifts: &'a ShiftSequence) -> Result<Self> {
        Ok(Self {
            problem,
            shifts: shifts.shifts(),
            next: 0,
            current: Arc::new(Brad::init(problem)?),
            done: false,
        })
    }
}

impl Iterator for BradStream<'_> {
    type Item = BradEvent;

    fn next(&mut self) -> Option<BradEvent> {
        if self.done || self.next >= self.shifts.len() {
            return None;
        }
        let s = self.shifts[self.next];
        self.next += 1;
        let f = match make_shifted_factorization(self.problem.a(), self.problem.e(), s) {
            Ok(f) => f,
            Err(e) => {
                log::warn!("skipping shift {s}: {e}");
                return Some(BradEvent::Skipped {
                    shift: s,
                    reason: e.to_string(),
                });
            }
        };
        let next = match self.current.extend(self.problem, &f) {
            Ok(b) => b,
            Err(Error::Breakdown { rank: 0, .. }) => {
                self.done = true;
                match self.current.close_invariant(self.problem, &f) {
                    Ok(b) => b,
                    Err(e) => {
                        return Some(BradEvent::Stopped {
                            shift: s,
                            reason: e.to_string(),
                        })
                    }
                }
            }
            Err(e) => {
                self.done = true;
                return Some(BradEvent::Stopped {
                    shift: s,
                    reason: e.to_string(),
                });
            }
        };
        self.current = Arc::new(next);
        Some(BradEvent::Step(self.current.clone()))
    }
}

/// Builds the whole decomposition sequence once, for sharing between
/// projector choices.
pub fn build_brad_sequence(problem: &CheckedProblem, shifts: &ShiftSequence, max_blocks: Option<usize>) -> Result<Vec<BradEvent>> {
    let mut steps = 0;
    let mut out = Vec::new();
    for ev in BradStream::new(problem, shifts)? {
        if let BradEvent::Step(_) = ev {
            steps += 1;
        }
        out.push(ev);
        if max_blocks.is_some_and(|m| steps >= m) {
            break;
        }
    }
    Ok(out)
}

/// Evaluation of one decomposition step.
struct StepOutcome {
    record: StepRecord,
    solution: Option<LowRankSolution>,
    truncated: Option<TruncatedSolution>,
    brad: Arc<Brad>,
}

fn relative(value: f64, denom: f64) -> f64 {
    if denom > 0.0 {
        value / denom
    } else {
        value
    }
}

fn evaluate_step(
    problem: &CheckedProblem,
    brad: &Arc<Brad>,
    choice: ProjectorChoice,
    opts: &RunOptions,
    denom: f64,
    previous: Option<(&LowRankSolution, f64)>,
) -> StepOutcome {
    let start = Instant::now();
    let shift = brad.poles().last().copied().unwrap_or_default();
    let mut record = StepRecord {
        j: brad.j(),
        status: StepStatus::Evaluated,
        dim: brad.k().ncols(),
        shift_re: shift.re,
        shift_im: shift.im,
        residual: None,
        rel_residual: None,
        r: None,
        trunc_residual: None,
        trunc_rel_residual: None,
        cond_ltk: None,
        seconds: 0.0,
        note: None,
    };
    let mut out = StepOutcome {
        record: record.clone(),
        solution: None,
        truncated: None,
        brad: brad.clone(),
    };

    let mut inner = || -> Result<()> {
        let work = if opts.orthonormalize_k {
            Arc::new(brad.orthonormalize_k()?)
        } else {
            brad.clone()
        };
        let l = build_l(&work, choice)?;
        let projected = project(&work, &l)?;
        record.cond_ltk = Some(projected.cond_ltk);
        let care_opts = DenseCareOptions {
            refine: opts.refine,
            ..DenseCareOptions::default()
        };
        match solve_step(&projected, &care_opts) {
            Ok(sol) => {
                let res = residual_norm_with(&work, &l, &sol.y, problem, opts.norm)?;
                record.residual = Some(res);
                record.rel_residual = Some(relative(res, denom));
                if opts.truncate {
                    match truncate(work.k(), work.h(), &l, &sol.y, &opts.policy) {
                        Ok(t) => {
                            let tr = truncated_residual_norm(&t, &work, Some(problem), opts.norm)?;
                            record.r = Some(t.rank());
                            record.trunc_residual = Some(tr);
                            record.trunc_rel_residual = Some(relative(tr, denom));
                            out.truncated = Some(t);
                        }
                        Err(e) => record.note = Some(format!("truncation skipped: {e}")),
                    }
                }
                out.solution = Some(LowRankSolution {
                    brad: work.clone(),
                    y: sol.y,
                });
                out.brad = work;
            }
            Err(e @ Error::NoStabilizingSolution { .. }) => {
                // Keep the previous iterate (its Y padded with zeros).
                let (prev, prev_res) = match previous {
                    Some((s, r)) => (s.clone(), r),
                    None => {
                        let q = brad.k().ncols();
                        let zero = LowRankSolution {
                            brad: brad.clone(),
                            y: CMat::zeros(q, q),
                        };
                        let r0 = problem.c().adjoint() * problem.c();
                        (zero, crate::residual::matrix_norm(&r0, opts.norm))
                    }
                };
                record.residual = Some(prev_res);
                record.rel_residual = Some(relative(prev_res, denom));
                record.status = StepStatus::Kept;
                record.note = Some(format!("{e}; previous iterate kept"));
                out.brad = prev.brad.clone();
                out.solution = Some(prev);
            }
            Err(e) => return Err(e),
        }
        Ok(())
    };
    if let Err(e) = inner() {
        log::warn!("step {} failed: {e}", brad.j());
        record.status = StepStatus::Failed;
        record.note = Some(e.to_string());
    }
    record.seconds = start.elapsed().as_secs_f64();
    out.record = record;
    out
}

/// Runs the projection method over a stream of decomposition events.
/// Converged runs stop early; the returned result reports `converged`.
pub fn drive(
    problem: &CheckedProblem,
    events: impl IntoIterator<Item = BradEvent>,
    choice: ProjectorChoice,
    opts: &RunOptions,
) -> Result<RunResult> {
    choice.validate()?;
    opts.validate()?;
    let denom = match opts.denominator {
        Denominator::Cch => crate::residual::matrix_norm(&(problem.c() * problem.c().adjoint()), opts.norm),
        Denominator::Absolute => 1.0,
    };
    let mut history = ConvergenceHistory::default();
    let mut best: Option<StepOutcome> = None;
    let mut steps = 0;
    let mut converged = false;
    for ev in events {
        match ev {
            BradEvent::Skipped { .. } | BradEvent::Stopped { .. } => {
                let (status, shift, reason) = match ev {
                    BradEvent::Skipped { shift, reason } => (StepStatus::Skipped, shift, reason),
                    BradEvent::Stopped { shift, reason } => (StepStatus::Stopped, shift, reason),
                    BradEvent::Step(_) => unreachable!(),
                };
                history.records.push(StepRecord {
                    j: best.as_ref().map(|b| b.record.j).unwrap_or(0),
                    status,
                    dim: best.as_ref().map(|b| b.record.dim).unwrap_or(0),
                    shift_re: shift.re,
                    shift_im: shift.im,
                    residual: None,
                    rel_residual: None,
                    r: None,
                    trunc_residual: None,
                    trunc_rel_residual: None,
                    cond_ltk: None,
                    seconds: 0.0,
                    note: Some(reason),
                });
            }
            BradEvent::Step(brad) => {
                if opts.max_blocks.is_some_and(|m| steps >= m) {
                    break;
                }
                steps += 1;
                let previous = best
                    .as_ref()
                    .and_then(|b| b.solution.as_ref().zip(b.record.residual));
                let outcome = evaluate_step(problem, &brad, choice, opts, denom, previous);
                history.records.push(outcome.record.clone());
                let rel = outcome.record.rel_residual.unwrap_or(f64::INFINITY);
                let trel = outcome.record.trunc_rel_residual.unwrap_or(f64::INFINITY);
                if outcome.solution.is_some() {
                    best = Some(outcome);
                }
                if rel.min(trel) <= opts.tol {
                    converged = true;
                    break;
                }
            }
        }
    }
    let (solution, truncated, brad, selected) = match best {
        Some(b) => {
            let rel = b.record.rel_residual.unwrap_or(f64::INFINITY);
            let trel = b.record.trunc_rel_residual.unwrap_or(f64::INFINITY);
            let selected = if b.truncated.is_some() && trel < rel {
                Candidate::Truncated
            } else {
                Candidate::Untruncated
            };
            (b.solution, b.truncated, Some(b.brad), selected)
        }
        None => (None, None, None, Candidate::Untruncated),
    };
    Ok(RunResult {
        choice,
        solution,
        truncated,
        selected,
        history,
        converged,
        brad,
    })
}

/// Runs the projection method along `shifts`, building the decomposition
/// lazily. A run that does not reach `opts.tol` fails with
/// [`Error::ShiftsExhausted`] carrying the best result so far.
pub fn run(problem: &CheckedProblem, shifts: &ShiftSequence, choice: ProjectorChoice, opts: &RunOptions) -> Result<RunResult> {
    let result = drive(problem, BradStream::new(problem, shifts)?, choice, opts)?;
    if result.converged {
        Ok(result)
    } else {
        Err(Error::ShiftsExhausted(Box::new(result)))
    }
}

/// Like [`run`] but on a prebuilt event sequence shared between runs.
pub fn run_on_sequence(
    problem: &CheckedProblem,
    events: &[BradEvent],
    choice: ProjectorChoice,
    opts: &RunOptions,
) -> Result<RunResult> {
    let result = drive(problem, events.iter().cloned(), choice, opts)?;
    if result.converged {
        Ok(result)
    } else {
        Err(Error::ShiftsExhausted(Box::new(result)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::CareProblem;
    use crate::sparse::SparseMatrix;

    fn c(re: f64) -> Cplx {
        Cplx::new(re, 0.0)
    }

    fn scalar() -> CheckedProblem {
        let one = CMat::from_element(1, 1, c(1.0));
        CareProblem::new(SparseMatrix::from_triplets(1, 1, vec![(0, 0, c(-1.0))]).unwrap(), None, one.clone(), one)
            .validate()
            .unwrap()
    }

    #[test]
    fn choice_parsing() {
        assert_eq!("K".parse::<ProjectorChoice>().unwrap(), ProjectorChoice::GalerkinK);
        assert_eq!("H".parse::<ProjectorChoice>().unwrap(), ProjectorChoice::PetrovH);
        assert_eq!(
            "combo:1,1".parse::<ProjectorChoice>().unwrap(),
            ProjectorChoice::Combo { alpha: c(1.0), beta: c(1.0) }
        );
        assert_eq!(
            "combo:1+2i,-0.5".parse::<ProjectorChoice>().unwrap(),
            ProjectorChoice::Combo {
                alpha: Cplx::new(1.0, 2.0),
                beta: c(-0.5)
            }
        );
        assert!("combo:0,0".parse::<ProjectorChoice>().is_err());
        assert!("Q".parse::<ProjectorChoice>().is_err());
        let choice = ProjectorChoice::Combo { alpha: c(1.0), beta: c(1.0) };
        assert_eq!(choice.to_string().parse::<ProjectorChoice>().unwrap(), choice);
    }

    #[test]
    fn scalar_run_is_exact() {
        let prob = scalar();
        let shifts = ShiftSequence::from_real(&[1.0]).unwrap();
        let res = run(&prob, &shifts, ProjectorChoice::GalerkinK, &RunOptions::default()).unwrap();
        assert_eq!(res.history.records.len(), 1);
        assert!(res.history.records[0].rel_residual.unwrap() <= 1e-14);
        let x = res.solution.unwrap().x_dense().unwrap();
        assert!((x[(0, 0)].re - (2f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn scalar_projection_reproduces_data() {
        let prob = scalar();
        let brad = crate::brad::build_sequence(&prob, &[c(0.5)]).unwrap().pop().unwrap();
        let l = build_l(&brad, ProjectorChoice::GalerkinK).unwrap();
        let pc = project(&brad, &l).unwrap();
        assert!((pc.aj[(0, 0)] - c(-1.0)).norm() < 1e-14);
        assert!((pc.bj[(0, 0)].norm() * pc.cj[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn galerkin_gram_is_positive_definite() {
        let prob = scalar();
        let brad = crate::brad::build_sequence(&prob, &[c(2.0)]).unwrap().pop().unwrap();
        let l = build_l(&brad, ProjectorChoice::GalerkinK).unwrap();
        let g = l.adjoint() * brad.k();
        assert!((&g - g.adjoint()).norm() == 0.0 && g[(0, 0)].re > 0.0);
    }
}
