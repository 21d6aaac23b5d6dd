//! Command-line front end of `riccati-rk`: `solve`, `compare` and `generate`.

pub mod args;
pub mod artifacts;
pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::Parser;

use riccati_rk::matrix_market::{write_dense, write_matrix_market};
use riccati_rk::problem::{FdmSpec, Manifest};
use riccati_rk::projector::{build_brad_sequence, drive, BradEvent, BradStream, Denominator, StepStatus};
use riccati_rk::residual::{dense_residual_matrix, matrix_norm};
use riccati_rk::{CheckedProblem, ProjectorChoice, RunResult, ShiftSequence};

use crate::args::{Cli, Command, CompareArgs, GenerateArgs, SolveArgs};
use crate::artifacts::{
    write_history_csv, write_json, write_solution, DenseCheck, HistoryDocument, Outcome, OutputIndex, ProblemInfo,
    RunSummary, StoredSolution, HISTORY_SCHEMA_ID,
};
use crate::config::{thread_cap, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_EXHAUSTED: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] riccati_rk::Error),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Config(String),
}

impl CliError {
    /// Stable tag printed with the message and stored in the output index.
    pub fn kind(&self) -> String {
        match self {
            Self::Core(e) => {
                let dbg = format!("{e:?}");
                let end = dbg.find(|c: char| !c.is_alphanumeric()).unwrap_or(dbg.len());
                dbg[..end].to_string()
            }
            Self::Io(_) => "Io".into(),
            Self::Csv(_) => "Csv".into(),
            Self::Json(_) => "Json".into(),
            Self::Config(_) => "Config".into(),
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    match cli.command {
        Command::Solve(a) => solve_from_args(&a),
        Command::Compare(a) => compare_from_args(&a),
        Command::Generate(a) => cmd_generate(&a),
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
}

fn report(err: &CliError) {
    eprintln!("error[{}]: {err}", err.kind());
}

fn solve_from_args(a: &SolveArgs) -> i32 {
    match RunConfig::new(&a.problem, &a.shifts, &a.solver, vec![a.l], a.mm_out) {
        Ok(config) => cmd_solve(&config),
        Err(e) => {
            report(&e);
            EXIT_FATAL
        }
    }
}

fn compare_from_args(a: &CompareArgs) -> i32 {
    let choices = if a.l.is_empty() {
        vec![
            ProjectorChoice::GalerkinK,
            ProjectorChoice::PetrovH,
            ProjectorChoice::Combo {
                alpha: 1.0.into(),
                beta: 1.0.into(),
            },
        ]
    } else {
        a.l.clone()
    };
    match RunConfig::new(&a.problem, &a.shifts, &a.solver, choices, false) {
        Ok(config) => cmd_compare(&config),
        Err(e) => {
            report(&e);
            EXIT_FATAL
        }
    }
}

/// Writes `manifest.json` into `out` and turns the outcome into an exit code.
fn finish(command: &str, out: &Path, outcome: Result<(i32, Vec<String>), CliError>) -> i32 {
    let (code, artifacts, error) = match outcome {
        Ok((code, artifacts)) => (code, artifacts, None),
        Err(e) => {
            report(&e);
            (EXIT_FATAL, Vec::new(), Some(format!("{}: {e}", e.kind())))
        }
    };
    let index = OutputIndex {
        command: command.into(),
        exit_code: code,
        error,
        artifacts,
    };
    let written = fs::create_dir_all(out)
        .map_err(CliError::from)
        .and_then(|_| write_json(&out.join("manifest.json"), &index));
    if let Err(e) = written {
        report(&e);
        return EXIT_FATAL;
    }
    code
}

fn problem_info(problem: &CheckedProblem) -> ProblemInfo {
    ProblemInfo {
        n: problem.n(),
        m: problem.m(),
        p: problem.p(),
        generalized: problem.e().is_some(),
    }
}

fn denominator(problem: &CheckedProblem, config: &RunConfig) -> f64 {
    match config.options.denominator {
        Denominator::Cch => matrix_norm(&(problem.c() * problem.c().adjoint()), config.options.norm),
        Denominator::Absolute => 1.0,
    }
}

fn summarize(problem: &CheckedProblem, result: &RunResult, config: &RunConfig) -> Result<RunSummary, CliError> {
    let factors = result.factors();
    let last = result
        .history
        .records
        .iter()
        .rev()
        .find(|r| matches!(r.status, StepStatus::Evaluated | StepStatus::Kept));
    let final_rel_residual = last.and_then(|r| match result.selected {
        riccati_rk::projector::Candidate::Truncated => r.trunc_rel_residual,
        riccati_rk::projector::Candidate::Untruncated => r.rel_residual,
    });
    let dense_check = match (&factors, config.dense_verify) {
        (Some((z, y)), true) => {
            let x = z * y * z.adjoint();
            let residual = matrix_norm(&dense_residual_matrix(problem, &x)?, config.options.norm);
            let denom = denominator(problem, config);
            Some(DenseCheck {
                residual,
                rel_residual: if denom > 0.0 { residual / denom } else { residual },
            })
        }
        _ => None,
    };
    Ok(RunSummary {
        choice: result.choice,
        outcome: if result.converged {
            Outcome::Converged
        } else {
            Outcome::ShiftsExhausted
        },
        selected: factors.as_ref().map(|_| result.selected),
        final_rel_residual,
        rank: factors.as_ref().map(|(z, _)| z.ncols()),
        error: None,
        dense_check,
        records: result.history.records.clone(),
    })
}

fn failed_summary(choice: ProjectorChoice, err: &CliError) -> RunSummary {
    RunSummary {
        choice,
        outcome: Outcome::Failed,
        selected: None,
        final_rel_residual: None,
        rank: None,
        error: Some(format!("{}: {err}", err.kind())),
        dense_check: None,
        records: Vec::new(),
    }
}

fn history_document(config: &RunConfig, problem: &CheckedProblem, shifts: &ShiftSequence, runs: Vec<RunSummary>) -> HistoryDocument {
    HistoryDocument {
        schema: HISTORY_SCHEMA_ID.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        problem: Some(problem_info(problem)),
        shifts: shifts.shifts().iter().map(|s| [s.re, s.im]).collect(),
        runs,
    }
}

fn write_histories(out: &Path, doc: &HistoryDocument, keyed: bool, artifacts: &mut Vec<String>) -> Result<(), CliError> {
    write_json(&out.join("history.json"), doc)?;
    artifacts.push("history.json".into());
    write_history_csv(&out.join("history.csv"), &doc.runs, keyed)?;
    artifacts.push("history.csv".into());
    Ok(())
}

/// Solves one problem and writes `history.json`, `history.csv` and the
/// factored solution. Exit code 0 on convergence, 2 when the shifts ran out
/// (best iterate still written), 1 on fatal errors.
pub fn cmd_solve(config: &RunConfig) -> i32 {
    finish("solve", &config.out, execute_solve(config))
}

fn execute_solve(config: &RunConfig) -> Result<(i32, Vec<String>), CliError> {
    let choice = *config
        .choices
        .first()
        .ok_or_else(|| CliError::Config("no projector choice given".into()))?;
    let (problem, shifts) = config.materialize()?;
    fs::create_dir_all(&config.out)?;
    let result = drive(&problem, BradStream::new(&problem, &shifts)?, choice, &config.options)?;
    let summary = summarize(&problem, &result, config)?;
    let mut artifacts = Vec::new();

    if let Some((z, y)) = result.factors() {
        let rel = summary.final_rel_residual;
        if config.mm_out {
            write_dense(config.out.join("Z.mtx"), &z)?;
            write_dense(config.out.join("Y.mtx"), &y)?;
            artifacts.push("Z.mtx".into());
            artifacts.push("Y.mtx".into());
        } else {
            let metadata = serde_json::json!({
                "choice": choice,
                "candidate": result.selected,
                "j": result.brad.as_ref().map(|b| b.j()),
                "n": z.nrows(),
                "q": z.ncols(),
                "rel_residual": rel,
                "converged": result.converged,
            });
            let stored = StoredSolution {
                kind: result.selected,
                metadata,
                z,
                y,
            };
            write_solution(&config.out.join("solution.bin"), &stored)?;
            artifacts.push("solution.bin".into());
        }
    }
    let code = if result.converged { EXIT_OK } else { EXIT_EXHAUSTED };
    let doc = history_document(config, &problem, &shifts, vec![summary]);
    write_histories(&config.out, &doc, false, &mut artifacts)?;
    Ok((code, artifacts))
}

/// Runs every configured choice over one shared decomposition and writes a
/// merged history keyed by choice. Exit code 3 when some choice failed
/// outright or had steps that could not be evaluated.
pub fn cmd_compare(config: &RunConfig) -> i32 {
    finish("compare", &config.out, execute_compare(config))
}

fn run_choices(
    problem: &CheckedProblem,
    events: &[BradEvent],
    config: &RunConfig,
    threads: usize,
) -> Vec<Result<RunResult, CliError>> {
    let count = config.choices.len();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunResult, CliError>>>> = Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, count.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let res = drive(problem, events.iter().cloned(), config.choices[i], &config.options).map_err(CliError::from);
                slots.lock().unwrap()[i] = Some(res);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("every choice is evaluated"))
        .collect()
}

fn execute_compare(config: &RunConfig) -> Result<(i32, Vec<String>), CliError> {
    let threads = thread_cap()?;
    let (problem, shifts) = config.materialize()?;
    fs::create_dir_all(&config.out)?;
    let events = build_brad_sequence(&problem, &shifts, config.options.max_blocks)?;
    let mut runs = Vec::with_capacity(config.choices.len());
    for (choice, res) in config.choices.iter().zip(run_choices(&problem, &events, config, threads)) {
        let summary = res.and_then(|r| summarize(&problem, &r, config));
        runs.push(summary.unwrap_or_else(|e| {
            log::warn!("choice {choice} failed: {e}");
            failed_summary(*choice, &e)
        }));
    }
    let code = if runs.iter().any(RunSummary::has_failures) {
        EXIT_PARTIAL
    } else if runs.iter().all(|r| r.outcome == Outcome::Converged) {
        EXIT_OK
    } else {
        EXIT_EXHAUSTED
    };
    let mut artifacts = Vec::new();
    let doc = history_document(config, &problem, &shifts, runs);
    write_histories(&config.out, &doc, true, &mut artifacts)?;
    Ok((code, artifacts))
}

/// Writes the generated problem as `A.mtx`, `B.mtx`, `C.mtx` and a
/// `manifest.json` that `--problem` accepts.
pub fn cmd_generate(args: &GenerateArgs) -> i32 {
    match generate(&args.fdm, &args.out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            report(&e);
            EXIT_FATAL
        }
    }
}

pub fn generate(spec: &str, out: &Path) -> Result<(), CliError> {
    let problem = FdmSpec::parse(spec)?.build()?;
    fs::create_dir_all(out)?;
    write_matrix_market(out.join("A.mtx"), &problem.a)?;
    write_dense(out.join("B.mtx"), &problem.b)?;
    write_dense(out.join("C.mtx"), &problem.c)?;
    let manifest = Manifest {
        a: Some("A.mtx".into()),
        e: None,
        b: Some("B.mtx".into()),
        c: Some("C.mtx".into()),
        generator: None,
    };
    write_json(&out.join("manifest.json"), &manifest)
}
