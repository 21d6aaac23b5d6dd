use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use riccati_rk::projector::DEFAULT_REFINE;
use riccati_rk::shifts::DEFAULT_SEED;
use riccati_rk::truncation::DEFAULT_TAU;
use riccati_rk::ProjectorChoice;

#[derive(Debug, Parser)]
#[command(name = "riccati-rk", version, about = "Low-rank solver for large continuous-time algebraic Riccati equations")]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem with one test space.
    Solve(SolveArgs),
    /// Run several test spaces on one shared decomposition.
    Compare(CompareArgs),
    /// Write a generated benchmark problem to Matrix Market files.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// JSON manifest naming Matrix Market files for A, E, B, C.
    #[arg(long, value_name = "MANIFEST", conflicts_with = "fdm", required_unless_present = "fdm")]
    pub problem: Option<PathBuf>,

    /// Convection-diffusion generator, e.g. `30` or `30,10*x,100*y,(0.1,0.3],(0.7,0.9]`.
    #[arg(long, value_name = "G[,FX,FY,BRANGE,CRANGE]")]
    pub fdm: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ShiftArgs {
    /// Shift file: one `re [im]` per line, or a JSON array.
    #[arg(long, value_name = "FILE", conflicts_with = "heuristic", required_unless_present = "heuristic")]
    pub shifts: Option<PathBuf>,

    /// Use J built-in log-spaced real poles.
    #[arg(long, value_name = "J")]
    pub heuristic: Option<usize>,

    /// Map every shift s to -conj(s), for lists written for ADI-type solvers.
    #[arg(long)]
    pub negate_shifts: bool,

    /// Accept repeated shifts in a shift file.
    #[arg(long)]
    pub allow_repeats: bool,

    /// Seed of the spectral estimates behind --heuristic.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Fro,
    #[value(name = "2")]
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DenominatorArg {
    /// ||C C^H||_F, equal to ||C^H C||_F.
    #[value(alias = "chc")]
    Cch,
    Absolute,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    #[arg(long, value_name = "N")]
    pub max_blocks: Option<usize>,

    /// Report the truncated iterate as well.
    #[arg(long)]
    pub truncate: bool,

    /// Relative eigenvalue threshold of the truncation.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,

    #[arg(long, value_enum, default_value = "fro")]
    pub norm: NormArg,

    #[arg(long, value_enum, default_value = "cch")]
    pub denominator: DenominatorArg,

    /// Work with an orthonormal K.
    #[arg(long)]
    pub orthonormalize_k: bool,

    /// Newton steps after each small Riccati solve.
    #[arg(long, default_value_t = DEFAULT_REFINE)]
    pub refine: usize,

    /// Also evaluate the residual densely (n <= 500).
    #[arg(long)]
    pub dense_verify: bool,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub shifts: ShiftArgs,
    #[command(flatten)]
    pub solver: SolverArgs,

    /// Test space: K, H or combo:ALPHA,BETA for ALPHA*H - BETA*K.
    #[arg(long = "L", value_name = "CHOICE", default_value = "K")]
    pub l: ProjectorChoice,

    /// Write Z.mtx and Y.mtx instead of solution.bin.
    #[arg(long)]
    pub mm_out: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub shifts: ShiftArgs,
    #[command(flatten)]
    pub solver: SolverArgs,

    /// Test spaces to compare (repeatable); defaults to K, H and combo:1,1.
    #[arg(long = "L", value_name = "CHOICE")]
    pub l: Vec<ProjectorChoice>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, value_name = "G[,FX,FY,BRANGE,CRANGE]")]
    pub fdm: String,

    #[arg(long, default_value = "problem")]
    pub out: PathBuf,
}
