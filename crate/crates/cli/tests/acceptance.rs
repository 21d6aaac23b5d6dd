//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line and fails when its check does not hold.

use std::fs;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;
use riccati_rk::dense_care::{newton_kleinman_oracle, solve_care_dense};
use riccati_rk::kernels::{eigenvalues, singular_values};
use riccati_rk::problem::{FdmSpec, Manifest};
use riccati_rk::projector::{build_l, drive, run, BradStream, ProjectorChoice, RunOptions, StepRecord};
use riccati_rk::residual::{dense_residual_matrix, dense_residual_oracle};
use riccati_rk::shifts::{heuristic_shifts, DEFAULT_SEED};
use riccati_rk::testkit::{
    numerical_rank_rel, oblique_projector, random_dense, random_shifts, random_stable_dense, random_stable_problem, rng,
    RandomSpec,
};
use riccati_rk::truncation::truncated_residual_rank;
use riccati_rk::{CMat, CareProblem, CheckedProblem, Cplx, RunResult, ShiftSequence, SparseMatrix, TruncationPolicy};
use riccati_rk_cli::artifacts::HistoryDocument;

const CHOICES: [ProjectorChoice; 3] = [
    ProjectorChoice::GalerkinK,
    ProjectorChoice::PetrovH,
    ProjectorChoice::Combo {
        alpha: Cplx { re: 1.0, im: 0.0 },
        beta: Cplx { re: 1.0, im: 0.0 },
    },
];

fn verdict(n: usize, ok: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn full_run(prob: &CheckedProblem, shifts: &ShiftSequence, choice: ProjectorChoice, truncate: Option<f64>) -> RunResult {
    let opts = RunOptions {
        tol: 1e-300,
        truncate: truncate.is_some(),
        policy: TruncationPolicy::new(truncate.unwrap_or(1e-12)).unwrap(),
        ..RunOptions::default()
    };
    drive(prob, BradStream::new(prob, shifts).unwrap(), choice, &opts).unwrap()
}

struct SweepCase {
    label: String,
    p: usize,
    /// `eps ||A||_F ||X||_F`, the rounding level of the computed factors
    floor: f64,
    compressed: f64,
    dense: f64,
    singular_values: Vec<f64>,
}

struct Sweep {
    cases: Vec<SweepCase>,
    elapsed: Duration,
}

/// 50 random problems, each solved with all three test spaces.
fn sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let mut r = rng(0xacce);
        let mut cases = Vec::new();
        for case in 0..50 {
            let n = r.random_range(30..=120);
            let m = r.random_range(1..=3);
            let p = r.random_range(1..=3);
            let j = r.random_range(1..=8);
            let complex = case % 3 == 2;
            let prob = random_stable_problem(&mut r, RandomSpec { complex, ..RandomSpec::new(n, m, p) }).unwrap();
            let shifts = random_shifts(&mut r, j).unwrap();
            for choice in CHOICES {
                let res = full_run(&prob, &shifts, choice, None);
                let compressed = res.history.last_evaluated().unwrap().residual.unwrap();
                let x = res.solution.unwrap().x_dense().unwrap();
                let resid = dense_residual_matrix(&prob, &x).unwrap();
                cases.push(SweepCase {
                    label: format!("case {case} (n={n} m={m} p={p} j={j} L={choice})"),
                    p,
                    floor: f64::EPSILON * prob.a().fro_norm() * x.norm(),
                    compressed,
                    dense: resid.norm(),
                    singular_values: singular_values(&resid),
                });
            }
        }
        Sweep {
            cases,
            elapsed: start.elapsed(),
        }
    })
}

#[test]
fn criterion_01_residual_formula() {
    let s = sweep();
    let (worst, label) = s
        .cases
        .iter()
        .map(|c| ((c.compressed - c.dense).abs() / c.dense, &c.label))
        .fold((0.0, None), |acc, (v, l)| if v > acc.0 { (v, Some(l)) } else { acc });
    let ok = worst <= 1e-8 && s.cases.len() >= 150 && s.elapsed < Duration::from_secs(120);
    verdict(
        1,
        ok,
        format!(
            "{} runs, worst relative gap {worst:.2e} at {}, {:.1}s",
            s.cases.len(),
            label.map(String::as_str).unwrap_or("-"),
            s.elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_rank_two_p() {
    let s = sweep();
    let mut worst: f64 = 0.0;
    let mut above_floor: f64 = 0.0;
    let mut failing = 0;
    for c in &s.cases {
        if let Some(&next) = c.singular_values.get(2 * c.p) {
            let ratio = next / c.singular_values[0];
            worst = worst.max(ratio);
            above_floor = above_floor.max(next / c.floor);
            if ratio > 1e-10 {
                failing += 1;
            }
        }
    }
    verdict(
        2,
        worst <= 1e-10,
        format!(
            "max sigma_(2p+1)/sigma_1 = {worst:.2e}, {failing} of {} runs above 1e-10; max sigma_(2p+1)/(eps ||A|| ||X||) = {above_floor:.2}",
            s.cases.len()
        ),
    );
}

#[test]
fn criterion_03_truncated_rank() {
    let table = [(6, 28, 163, 22), (6, 46, 187, 190)];
    let mut ok = table.iter().all(|&(p, j, r, rank)| truncated_residual_rank(j, p, r) == rank);
    let mut checked = 0;
    let mut complement_bound = 0;
    let mut r = rng(0x7ab1e);
    for p in 1..=3 {
        let prob = random_stable_problem(&mut r, RandomSpec::new(90, 2, p)).unwrap();
        let shifts = random_shifts(&mut r, 7).unwrap();
        for choice in CHOICES {
            for tau in [1e-2, 1e-3, 1e-4] {
                let res = full_run(&prob, &shifts, choice, Some(tau));
                let brad = res.brad.as_ref().unwrap();
                let t = res.truncated.as_ref().unwrap();
                // only instances where something was actually dropped
                if t.rank() == brad.k().ncols() {
                    continue;
                }
                let z = t.z_hat(brad);
                let resid = dense_residual_matrix(&prob, &(&z * t.y_hat_matrix() * z.adjoint())).unwrap();
                let expected = truncated_residual_rank(brad.j(), p, t.rank());
                if expected == 2 * ((brad.j() + 1) * p - t.rank()) {
                    complement_bound += 1;
                }
                let got = numerical_rank_rel(&resid, 1e-10);
                if got != expected {
                    ok = false;
                    println!("  p={p} {choice} tau={tau}: rank {got}, expected {expected}");
                }
                checked += 1;
            }
        }
    }
    ok &= checked >= 18 && complement_bound >= 9;
    verdict(
        3,
        ok,
        format!("table pairs reproduced, {checked} truncated instances ({complement_bound} with rank 2((j+1)p - r), the rest 2r + p)"),
    );
}

#[test]
fn criterion_04_scalar() {
    let one = CMat::from_element(1, 1, Cplx::new(1.0, 0.0));
    let a = SparseMatrix::from_triplets(1, 1, vec![(0, 0, Cplx::new(-1.0, 0.0))]).unwrap();
    let prob = CareProblem::new(a, None, one.clone(), one).validate().unwrap();
    let shifts = ShiftSequence::from_real(&[1.0]).unwrap();
    let res = run(&prob, &shifts, ProjectorChoice::GalerkinK, &RunOptions::default()).unwrap();
    let x = res.solution.as_ref().unwrap().x_dense().unwrap();
    let err = (x[(0, 0)] - Cplx::new(2f64.sqrt() - 1.0, 0.0)).norm();
    let resid = dense_residual_oracle(&prob, &x).unwrap();
    let reported = res.history.last_evaluated().unwrap().residual.unwrap();
    verdict(
        4,
        err <= 1e-12 && resid <= 1e-14 && reported <= 1e-14,
        format!("|X - (sqrt2 - 1)| = {err:.1e}, residual {resid:.1e} (reported {reported:.1e})"),
    );
}

#[test]
fn criterion_05_projected_residual_vanishes() {
    let mut r = rng(0x9a1e);
    let mut worst: f64 = 0.0;
    for n in [40, 80, 120] {
        for p in [1, 3] {
            let prob = random_stable_problem(&mut r, RandomSpec::new(n, 2, p)).unwrap();
            let shifts = random_shifts(&mut r, 6).unwrap();
            let cc = (prob.c().adjoint() * prob.c()).norm();
            for choice in CHOICES {
                let sol = full_run(&prob, &shifts, choice, None).solution.unwrap();
                let brad = &sol.brad;
                let w = brad.v_mul(&build_l(brad, choice).unwrap());
                let pi = oblique_projector(&brad.z(), &w).unwrap();
                let resid = dense_residual_matrix(&prob, &sol.x_dense().unwrap()).unwrap();
                worst = worst.max((&pi * resid * pi.adjoint()).norm() / cc);
            }
        }
    }
    verdict(5, worst <= 1e-8, format!("max ||Pi R Pi^H|| / ||C^H C|| = {worst:.2e}"));
}

#[test]
fn criterion_06_truncated_iterates() {
    let mut r = rng(0x7e0);
    let mut worst: f64 = 0.0;
    let mut truncated_runs = 0;
    for n in [40, 80, 120] {
        let prob = random_stable_problem(&mut r, RandomSpec::new(n, 2, 2)).unwrap();
        let shifts = random_shifts(&mut r, 6).unwrap();
        let cc = (prob.c().adjoint() * prob.c()).norm();
        for choice in CHOICES {
            let res = full_run(&prob, &shifts, choice, Some(1e-2));
            let brad = res.brad.as_ref().unwrap();
            let t = res.truncated.as_ref().unwrap();
            if t.rank() < brad.k().ncols() {
                truncated_runs += 1;
            }
            let z = t.z_hat(brad);
            let pi = oblique_projector(&z, &brad.v_mul(&t.l_hat)).unwrap();
            let resid = dense_residual_matrix(&prob, &(&z * t.y_hat_matrix() * z.adjoint())).unwrap();
            worst = worst.max((&pi * resid * pi.adjoint()).norm() / cc);
        }
    }
    // nothing truncated: both residuals coincide
    let mut gap: f64 = 0.0;
    let mut untouched = 0;
    for case in 0..6 {
        let prob = random_stable_problem(&mut r, RandomSpec::new(50, 2, 1 + case % 2)).unwrap();
        let shifts = random_shifts(&mut r, 3).unwrap();
        let res = full_run(&prob, &shifts, CHOICES[case % 3], Some(1e-14));
        let rec = res.history.last_evaluated().unwrap();
        if rec.r == Some(rec.dim) {
            untouched += 1;
            let (a, b) = (rec.residual.unwrap(), rec.trunc_residual.unwrap());
            gap = gap.max((a - b).abs() / a);
        }
    }
    verdict(
        6,
        worst <= 1e-8 && truncated_runs == 9 && untouched >= 3 && gap <= 1e-10,
        format!("max projected {worst:.2e} over {truncated_runs} truncated runs; no-op gap {gap:.1e} over {untouched} runs"),
    );
}

fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn opt_gap(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) => rel_gap(a, b),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    }
}

/// Largest relative difference over every numeric field except wall time.
fn record_gap(x: &StepRecord, y: &StepRecord) -> f64 {
    if x.j != y.j || x.dim != y.dim || x.r != y.r || x.status != y.status || x.note != y.note {
        return f64::INFINITY;
    }
    [
        rel_gap(x.shift_re, y.shift_re),
        rel_gap(x.shift_im, y.shift_im),
        opt_gap(x.residual, y.residual),
        opt_gap(x.rel_residual, y.rel_residual),
        opt_gap(x.trunc_residual, y.trunc_residual),
        opt_gap(x.trunc_rel_residual, y.trunc_rel_residual),
        opt_gap(x.cond_ltk, y.cond_ltk),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn history_gap(a: &[StepRecord], b: &[StepRecord]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| record_gap(x, y)).fold(0.0, f64::max)
}

#[test]
fn criterion_07_generalized_consistency() {
    let mut r = rng(0xe7);
    let mut identity_gap: f64 = 0.0;
    for case in 0..6 {
        let prob = random_stable_problem(&mut r, RandomSpec { complex: case % 2 == 1, ..RandomSpec::new(60, 2, 2) }).unwrap();
        let with_e = CareProblem::new(
            prob.a().clone(),
            Some(SparseMatrix::identity(60)),
            prob.b().clone(),
            prob.c().clone(),
        )
        .validate()
        .unwrap();
        let shifts = random_shifts(&mut r, 5).unwrap();
        let choice = CHOICES[case % 3];
        let a = full_run(&prob, &shifts, choice, Some(1e-8));
        let b = full_run(&with_e, &shifts, choice, Some(1e-8));
        identity_gap = identity_gap.max(history_gap(&a.history.records, &b.history.records));
    }
    let mut dense_gap: f64 = 0.0;
    for n in [40, 70, 100] {
        let prob = random_stable_problem(&mut r, RandomSpec { generalized: true, ..RandomSpec::new(n, 2, 2) }).unwrap();
        let shifts = random_shifts(&mut r, 5).unwrap();
        for choice in CHOICES {
            let res = full_run(&prob, &shifts, choice, None);
            let fast = res.history.last_evaluated().unwrap().residual.unwrap();
            let dense = dense_residual_oracle(&prob, &res.solution.unwrap().x_dense().unwrap()).unwrap();
            dense_gap = dense_gap.max((fast - dense).abs() / dense);
        }
    }
    verdict(
        7,
        identity_gap <= 1e-12 && dense_gap <= 1e-8,
        format!("E = I history gap {identity_gap:.1e}; SPD E vs dense {dense_gap:.1e}"),
    );
}

#[test]
fn criterion_08_desk_scale_convergence() {
    let start = Instant::now();
    let prob = FdmSpec::new(30).build().unwrap().validate().unwrap();
    let shifts = heuristic_shifts(&prob, 20, DEFAULT_SEED).unwrap();
    // eigenvalue ratios below the target tolerance are dropped
    let opts = RunOptions {
        tol: 1e-8,
        truncate: true,
        policy: TruncationPolicy::new(1e-8).unwrap(),
        ..RunOptions::default()
    };
    let res = drive(&prob, BradStream::new(&prob, &shifts).unwrap(), ProjectorChoice::GalerkinK, &opts).unwrap();
    let elapsed = start.elapsed();
    let rec = res.history.last_evaluated().unwrap();
    let rel = rec.rel_residual.unwrap();
    let trel = rec.trunc_rel_residual.unwrap_or(f64::INFINITY);
    let r = rec.r.unwrap_or(rec.dim);
    let p = prob.p();
    let ok = res.converged && elapsed < Duration::from_secs(60) && r < rec.j * p && trel <= 10.0 * rel;
    verdict(
        8,
        ok,
        format!(
            "n={} j={} rel {rel:.2e} (target 1e-8), truncated rel {trel:.2e} (limit 10x), r={r} vs jp={}, {:.1}s",
            prob.n(),
            rec.j,
            rec.j * p,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_09_dense_solver_cross_check() {
    let mut r = rng(0xd9);
    let mut worst: f64 = 0.0;
    let mut unstable = 0;
    for case in 0..200 {
        let d = r.random_range(1..=12);
        let m = r.random_range(1..=3);
        let p = r.random_range(1..=3);
        let complex = case % 2 == 0;
        let a = random_stable_dense(&mut r, d, complex).unwrap();
        let b = random_dense(&mut r, d, m, complex);
        let c = random_dense(&mut r, p, d, complex);
        let schur = solve_care_dense(&a, &b, &c).unwrap();
        let newton = newton_kleinman_oracle(&a, &b, &c, 60).unwrap();
        worst = worst.max((&schur.y - &newton).norm() / newton.norm().max(f64::MIN_POSITIVE));
        let closed = &a - &b * (b.adjoint() * &schur.y);
        if !eigenvalues(&closed).unwrap().iter().all(|z| z.re < 0.0) {
            unstable += 1;
        }
    }
    verdict(
        9,
        worst <= 1e-8 && unstable == 0,
        format!("200 instances, max relative difference {worst:.2e}, {unstable} unstable closed loops"),
    );
}

#[test]
fn criterion_10_cli_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let shifts_file = dir.join("shifts.txt");
    let spec = FdmSpec::new(12);
    let in_memory = spec.build().unwrap().validate().unwrap();
    let shifts = heuristic_shifts(&in_memory, 10, DEFAULT_SEED).unwrap();
    let text: String = shifts.shifts().iter().map(|s| format!("{:e} {:e}\n", s.re, s.im)).collect();
    fs::write(&shifts_file, text).unwrap();

    let bin = env!("CARGO_BIN_EXE_riccati-rk");
    let status = Command::new(bin)
        .args(["generate", "--fdm", "12", "--out"])
        .arg(dir.join("problem"))
        .status()
        .unwrap();
    assert!(status.success());
    let solve = |out: &str| {
        Command::new(bin)
            .args(["solve", "--truncate", "--tau", "1e-8", "--problem"])
            .arg(dir.join("problem/manifest.json"))
            .arg("--shifts")
            .arg(&shifts_file)
            .arg("--out")
            .arg(dir.join(out))
            .status()
            .unwrap()
    };
    let (s1, s2) = (solve("run1"), solve("run2"));
    let csv1 = fs::read(dir.join("run1/history.csv")).unwrap();
    let csv2 = fs::read(dir.join("run2/history.csv")).unwrap();
    let identical = s1.code() == s2.code() && csv1 == csv2;

    let loaded = Manifest::load(dir.join("problem/manifest.json")).unwrap().validate().unwrap();
    let bit_exact = loaded.a().to_dense() == in_memory.a().to_dense()
        && loaded.b() == in_memory.b()
        && loaded.c() == in_memory.c();
    let file_shifts = ShiftSequence::load(&shifts_file, false).unwrap();
    let opts = RunOptions {
        truncate: true,
        policy: TruncationPolicy::new(1e-8).unwrap(),
        ..RunOptions::default()
    };
    let reference = drive(&in_memory, BradStream::new(&in_memory, &file_shifts).unwrap(), ProjectorChoice::GalerkinK, &opts).unwrap();
    let doc: HistoryDocument = serde_json::from_str(&fs::read_to_string(dir.join("run1/history.json")).unwrap()).unwrap();
    let gap = history_gap(&doc.runs[0].records, &reference.history.records);
    verdict(
        10,
        identical && bit_exact && gap <= 1e-12,
        format!(
            "history.csv identical: {identical}, generated files load bit-exactly: {bit_exact}, history gap {gap:.1e} over {} rows",
            reference.history.records.len()
        ),
    );
}
