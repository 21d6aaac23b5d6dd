use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use riccati_rk::problem::{CareProblem, FdmSpec, Manifest};
use riccati_rk::projector::{Denominator, RunOptions};
use riccati_rk::residual::ResidualNorm;
use riccati_rk::shifts::heuristic_shifts;
use riccati_rk::{CheckedProblem, ProjectorChoice, ShiftSequence, TruncationPolicy, DENSE_CAP};

use crate::args::{DenominatorArg, NormArg, ProblemArgs, ShiftArgs, SolverArgs};
use crate::CliError;

pub const THREADS_ENV: &str = "RICCATI_RK_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSource {
    Manifest { path: PathBuf },
    Fdm { spec: FdmSpec },
}

impl ProblemSource {
    pub fn from_args(args: &ProblemArgs) -> Result<Self, CliError> {
        match (&args.problem, &args.fdm) {
            (Some(path), None) => Ok(Self::Manifest { path: path.clone() }),
            (None, Some(spec)) => Ok(Self::Fdm {
                spec: FdmSpec::parse(spec)?,
            }),
            _ => Err(CliError::Config("give exactly one of --problem and --fdm".into())),
        }
    }

    pub fn load(&self) -> Result<CareProblem, CliError> {
        Ok(match self {
            Self::Manifest { path } => Manifest::load(path)?,
            Self::Fdm { spec } => spec.build()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftSource {
    File { path: PathBuf, allow_repeats: bool },
    Heuristic { count: usize, seed: u64 },
}

impl ShiftSource {
    pub fn from_args(args: &ShiftArgs) -> Result<Self, CliError> {
        match (&args.shifts, args.heuristic) {
            (Some(path), None) => Ok(Self::File {
                path: path.clone(),
                allow_repeats: args.allow_repeats,
            }),
            (None, Some(count)) => Ok(Self::Heuristic { count, seed: args.seed }),
            _ => Err(CliError::Config("give exactly one of --shifts and --heuristic".into())),
        }
    }

    pub fn load(&self, problem: &CheckedProblem) -> Result<ShiftSequence, CliError> {
        Ok(match self {
            Self::File { path, allow_repeats } => ShiftSequence::load(path, *allow_repeats)?,
            Self::Heuristic { count, seed } => heuristic_shifts(problem, *count, *seed)?,
        })
    }
}

/// Everything needed to reproduce a run; echoed into `history.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub shifts: ShiftSource,
    pub negate_shifts: bool,
    pub choices: Vec<ProjectorChoice>,
    pub options: RunOptions,
    pub dense_verify: bool,
    pub mm_out: bool,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(
        problem: &ProblemArgs,
        shifts: &ShiftArgs,
        solver: &SolverArgs,
        choices: Vec<ProjectorChoice>,
        mm_out: bool,
    ) -> Result<Self, CliError> {
        let options = RunOptions {
            tol: solver.tol,
            max_blocks: solver.max_blocks,
            truncate: solver.truncate,
            policy: TruncationPolicy::new(solver.tau)?,
            norm: match solver.norm {
                NormArg::Fro => ResidualNorm::Frobenius,
                NormArg::Two => ResidualNorm::Spectral,
            },
            denominator: match solver.denominator {
                DenominatorArg::Cch => Denominator::Cch,
                DenominatorArg::Absolute => Denominator::Absolute,
            },
            orthonormalize_k: solver.orthonormalize_k,
            refine: solver.refine,
        };
        options.validate()?;
        if choices.is_empty() {
            return Err(CliError::Config("no projector choice given".into()));
        }
        Ok(Self {
            problem: ProblemSource::from_args(problem)?,
            shifts: ShiftSource::from_args(shifts)?,
            negate_shifts: shifts.negate_shifts,
            choices,
            options,
            dense_verify: solver.dense_verify,
            mm_out,
            out: solver.out.clone(),
        })
    }

    /// Loads and validates the problem and its shifts.
    pub fn materialize(&self) -> Result<(CheckedProblem, ShiftSequence), CliError> {
        let problem = self.problem.load()?.validate()?;
        if self.dense_verify && problem.n() > DENSE_CAP {
            return Err(CliError::Config(format!(
                "--dense-verify needs n <= {DENSE_CAP}, the problem has n = {}",
                problem.n()
            )));
        }
        let mut shifts = self.shifts.load(&problem)?;
        if self.negate_shifts {
            shifts = shifts.mirrored();
        }
        Ok((problem, shifts))
    }
}

/// Worker cap from the environment; defaults to the available parallelism.
pub fn thread_cap() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}
