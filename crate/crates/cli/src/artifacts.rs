//! Files written by the commands.
//!
//! `solution.bin` layout, all integers and floats little-endian:
//!
//! | bytes        | content                                   |
//! |--------------|-------------------------------------------|
//! | 8            | magic `RKSOL001`                          |
//! | 8            | `n`, rows of `Z` (u64)                    |
//! | 8            | `q`, columns of `Z` and order of `Y` (u64)|
//! | 8            | kind: 0 untruncated, 1 truncated (u64)    |
//! | 8            | metadata length `k` (u64)                 |
//! | `k`          | metadata, UTF-8 JSON                      |
//! | `16 n q`     | `Z`, column-major `(re, im)` f64 pairs    |
//! | `16 q q`     | `Y`, column-major `(re, im)` f64 pairs    |
//!
//! The solution is `X = Z Y Z^H`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use riccati_rk::projector::{Candidate, StepRecord, StepStatus};
use riccati_rk::{CMat, Cplx, ProjectorChoice};

use crate::config::RunConfig;
use crate::CliError;

pub const SOLUTION_MAGIC: &[u8; 8] = b"RKSOL001";
pub const HISTORY_SCHEMA_ID: &str = "riccati-rk/history/v1";
/// JSON Schema of `history.json`.
pub const HISTORY_SCHEMA: &str = include_str!("../schema/history.schema.json");

pub const CSV_COLUMNS: [&str; 10] = [
    "j",
    "dim",
    "shift_re",
    "shift_im",
    "status",
    "rel_residual",
    "r",
    "trunc_rel_residual",
    "cond_LtK",
    "note",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    ShiftsExhausted,
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInfo {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub generalized: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseCheck {
    pub residual: f64,
    pub rel_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub choice: ProjectorChoice,
    pub outcome: Outcome,
    pub selected: Option<Candidate>,
    pub final_rel_residual: Option<f64>,
    /// Columns of the reported factor `Z`.
    pub rank: Option<usize>,
    pub error: Option<String>,
    pub dense_check: Option<DenseCheck>,
    pub records: Vec<StepRecord>,
}

impl RunSummary {
    /// True when some step of this run could not be evaluated.
    pub fn has_failures(&self) -> bool {
        self.outcome == Outcome::Failed || self.records.iter().any(|r| r.status == StepStatus::Failed)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HistoryDocument {
    pub schema: String,
    pub version: String,
    pub config: RunConfig,
    pub problem: Option<ProblemInfo>,
    pub shifts: Vec<[f64; 2]>,
    pub runs: Vec<RunSummary>,
}

/// Index of what a command wrote, `manifest.json` in the output directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputIndex {
    pub command: String,
    pub exit_code: i32,
    pub error: Option<String>,
    pub artifacts: Vec<String>,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn status_name(s: StepStatus) -> &'static str {
    match s {
        StepStatus::Evaluated => "evaluated",
        StepStatus::Kept => "kept",
        StepStatus::Failed => "failed",
        StepStatus::Skipped => "skipped",
        StepStatus::Stopped => "stopped",
    }
}

/// Writes the plot-ready table. With `keyed`, a leading `choice` column
/// identifies the run of each row. Wall times are left to `history.json`
/// so that repeated runs give identical files.
pub fn write_history_csv(path: &Path, runs: &[RunSummary], keyed: bool) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = Vec::new();
    if keyed {
        header.push("choice");
    }
    header.extend(CSV_COLUMNS);
    w.write_record(&header)?;
    for run in runs {
        let key = run.choice.to_string();
        for rec in &run.records {
            let mut row = Vec::with_capacity(header.len());
            if keyed {
                row.push(key.clone());
            }
            row.push(rec.j.to_string());
            row.push(rec.dim.to_string());
            row.push(fmt_f64(rec.shift_re));
            row.push(fmt_f64(rec.shift_im));
            row.push(status_name(rec.status).to_string());
            row.push(fmt_opt(rec.rel_residual));
            row.push(rec.r.map(|r| r.to_string()).unwrap_or_default());
            row.push(fmt_opt(rec.trunc_rel_residual));
            row.push(fmt_opt(rec.cond_ltk));
            row.push(rec.note.clone().unwrap_or_default());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// A factored solution as stored in `solution.bin`.
#[derive(Clone, Debug)]
pub struct StoredSolution {
    pub kind: Candidate,
    pub metadata: serde_json::Value,
    pub z: CMat,
    pub y: CMat,
}

fn put_complex(w: &mut impl Write, m: &CMat) -> std::io::Result<()> {
    // nalgebra stores column-major
    for z in m.iter() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_solution(path: &Path, sol: &StoredSolution) -> Result<(), CliError> {
    let (n, q) = sol.z.shape();
    if sol.y.shape() != (q, q) {
        return Err(CliError::Config(format!("Y is {:?}, expected {q}x{q}", sol.y.shape())));
    }
    let meta = serde_json::to_vec(&sol.metadata)?;
    let kind: u64 = match sol.kind {
        Candidate::Untruncated => 0,
        Candidate::Truncated => 1,
    };
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SOLUTION_MAGIC)?;
    for v in [n as u64, q as u64, kind, meta.len() as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&meta)?;
    put_complex(&mut w, &sol.z)?;
    put_complex(&mut w, &sol.y)?;
    w.flush()?;
    Ok(())
}

pub fn read_solution(path: &Path) -> Result<StoredSolution, CliError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |msg: &str| CliError::Config(format!("{}: {msg}", path.display()));
    if bytes.len() < 40 || &bytes[..8] != SOLUTION_MAGIC {
        return Err(bad("not a solution file"));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap());
    let (n, q, kind, k) = (word(0) as usize, word(1) as usize, word(2), word(3) as usize);
    let kind = match kind {
        0 => Candidate::Untruncated,
        1 => Candidate::Truncated,
        _ => return Err(bad("unknown solution kind")),
    };
    let body = 40 + k;
    if bytes.len() != body + 16 * (n * q + q * q) {
        return Err(bad("truncated or oversized file"));
    }
    let metadata = serde_json::from_slice(&bytes[40..body])?;
    let read = |start: usize, rows: usize, cols: usize| {
        let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        CMat::from_iterator(
            rows,
            cols,
            (0..rows * cols).map(|i| Cplx::new(f(start + 16 * i), f(start + 16 * i + 8))),
        )
    };
    let z = read(body, n, q);
    let y = read(body + 16 * n * q, q, q);
    Ok(StoredSolution { kind, metadata, z, y })
}
