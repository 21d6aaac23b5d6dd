use riccati_rk::kernels::hermitian_eig;
use riccati_rk::projector::{build_l, drive, BradStream, ProjectorChoice, RunOptions};
use riccati_rk::residual::{dense_residual_matrix, dense_residual_oracle};
use riccati_rk::testkit::{numerical_rank_rel, oblique_projector, random_shifts, random_stable_problem, rng, RandomSpec};
use riccati_rk::truncation::{truncate, truncated_residual_norm, truncated_residual_rank};
use riccati_rk::{CMat, CheckedProblem, Cplx, RunResult, ShiftSequence, TruncationPolicy};

const CHOICES: [ProjectorChoice; 3] = [
    ProjectorChoice::GalerkinK,
    ProjectorChoice::PetrovH,
    ProjectorChoice::Combo {
        alpha: Cplx { re: 1.0, im: 0.0 },
        beta: Cplx { re: 1.0, im: 0.0 },
    },
];

fn solve(prob: &CheckedProblem, shifts: &ShiftSequence, choice: ProjectorChoice, tau: f64, orthonormalize_k: bool) -> RunResult {
    let opts = RunOptions {
        tol: 1e-300,
        truncate: true,
        policy: TruncationPolicy::new(tau).unwrap(),
        orthonormalize_k,
        ..RunOptions::default()
    };
    drive(prob, BradStream::new(prob, shifts).unwrap(), choice, &opts).unwrap()
}

#[test]
fn table_rank_arithmetic() {
    assert_eq!(truncated_residual_rank(28, 6, 163), 22);
    assert_eq!(truncated_residual_rank(46, 6, 187), 190);
    assert_eq!(truncated_residual_rank(5, 2, 10), 2 * 2);
    // heavy truncation: capped by 2r + p
    assert_eq!(truncated_residual_rank(7, 1, 3), 7);
}

#[test]
fn truncated_iterate_satisfies_its_projected_equation() {
    let mut r = rng(41);
    for n in [40, 90] {
        let prob = random_stable_problem(&mut r, RandomSpec::new(n, 2, 2)).unwrap();
        let shifts = random_shifts(&mut r, 6).unwrap();
        let cc = (prob.c().adjoint() * prob.c()).norm();
        for choice in CHOICES {
            let res = solve(&prob, &shifts, choice, 1e-2, false);
            let t = res.truncated.as_ref().unwrap();
            let brad = res.brad.as_ref().unwrap();
            assert!(t.rank() < brad.k().ncols(), "{choice}: nothing truncated");
            let z = t.z_hat(brad);
            let w = brad.v_mul(&t.l_hat);
            let pi_hat = oblique_projector(&z, &w).unwrap();
            let x_hat = &z * t.y_hat_matrix() * z.adjoint();
            let resid = dense_residual_matrix(&prob, &x_hat).unwrap();
            let projected = (&pi_hat * resid * pi_hat.adjoint()).norm();
            assert!(projected <= 1e-8 * cc, "n={n} {choice}: {}", projected / cc);
        }
    }
}

#[test]
fn truncated_projector_absorbs_the_full_one() {
    let mut r = rng(42);
    let prob = random_stable_problem(&mut r, RandomSpec::new(30, 2, 2)).unwrap();
    let shifts = random_shifts(&mut r, 5).unwrap();
    for choice in CHOICES {
        let res = solve(&prob, &shifts, choice, 1e-3, false);
        let brad = res.brad.as_ref().unwrap();
        let t = res.truncated.as_ref().unwrap();
        let l = build_l(brad, choice).unwrap();
        let pi = oblique_projector(brad.k(), &l).unwrap();
        let pi_hat = oblique_projector(&t.q_hat, &t.l_hat).unwrap();
        let scale = pi_hat.norm() * pi.norm();
        assert!((&pi_hat * &pi - &pi_hat).norm() <= 1e-12 * scale, "{choice}");
    }
}

#[test]
fn kept_vectors_as_test_basis_only_suit_galerkin() {
    let mut r = rng(43);
    let prob = random_stable_problem(&mut r, RandomSpec::new(30, 2, 2)).unwrap();
    let shifts = random_shifts(&mut r, 5).unwrap();
    let res = solve(&prob, &shifts, ProjectorChoice::PetrovH, 1e-3, false);
    let brad = res.brad.as_ref().unwrap();
    let t = res.truncated.as_ref().unwrap();
    let l = build_l(brad, ProjectorChoice::PetrovH).unwrap();
    let pi = oblique_projector(brad.k(), &l).unwrap();
    let naive = oblique_projector(&t.q_hat, &t.q_hat).unwrap();
    assert!((&naive * &pi - &naive).norm() > 1e-6 * naive.norm());
}

#[test]
fn compressed_truncated_norm_matches_dense() {
    let mut r = rng(44);
    let prob = random_stable_problem(&mut r, RandomSpec::new(60, 2, 2)).unwrap();
    let shifts = random_shifts(&mut r, 6).unwrap();
    for choice in CHOICES {
        let res = solve(&prob, &shifts, choice, 1e-5, false);
        let brad = res.brad.as_ref().unwrap();
        let t = res.truncated.as_ref().unwrap();
        let z = t.z_hat(brad);
        let x_hat = &z * t.y_hat_matrix() * z.adjoint();
        let dense = dense_residual_oracle(&prob, &x_hat).unwrap();
        let fast = truncated_residual_norm(t, brad, Some(&prob), Default::default()).unwrap();
        assert!((fast - dense).abs() <= 1e-9 * dense, "{choice}: {fast} vs {dense}");
    }
}

#[test]
fn truncated_residual_rank_law() {
    let mut r = rng(45);
    for p in [1, 2] {
        let prob = random_stable_problem(&mut r, RandomSpec::new(80, 2, p)).unwrap();
        let shifts = random_shifts(&mut r, 7).unwrap();
        for tau in [1e-2, 1e-3, 1e-5] {
            let res = solve(&prob, &shifts, ProjectorChoice::GalerkinK, tau, false);
            let brad = res.brad.as_ref().unwrap();
            let t = res.truncated.as_ref().unwrap();
            let z = t.z_hat(brad);
            let x_hat = &z * t.y_hat_matrix() * z.adjoint();
            let resid = dense_residual_matrix(&prob, &x_hat).unwrap();
            assert_eq!(numerical_rank_rel(&resid, 1e-10), truncated_residual_rank(brad.j(), p, t.rank()));
        }
    }
}

#[test]
fn truncated_iterate_is_psd_of_rank_r() {
    let mut r = rng(46);
    let prob = random_stable_problem(&mut r, RandomSpec::new(40, 1, 2)).unwrap();
    let shifts = random_shifts(&mut r, 5).unwrap();
    let res = solve(&prob, &shifts, ProjectorChoice::Combo { alpha: Cplx::new(1.0, 0.0), beta: Cplx::new(1.0, 0.0) }, 1e-4, false);
    let brad = res.brad.as_ref().unwrap();
    let t = res.truncated.as_ref().unwrap();
    assert!(t.y_hat.iter().all(|&v| v > 0.0));
    let z = t.z_hat(brad);
    let x_hat = &z * t.y_hat_matrix() * z.adjoint();
    let eig = hermitian_eig(&x_hat).unwrap();
    let top = eig.values[0];
    assert_eq!(eig.values.iter().filter(|&&v| v > 1e-12 * top).count(), t.rank());
    assert!(eig.values.iter().all(|&v| v > -1e-12 * top));
}

#[test]
fn no_op_truncation_keeps_the_residual() {
    let mut r = rng(47);
    let prob = random_stable_problem(&mut r, RandomSpec::new(40, 2, 1)).unwrap();
    let shifts = random_shifts(&mut r, 3).unwrap();
    let res = solve(&prob, &shifts, ProjectorChoice::GalerkinK, 1e-12, true);
    let rec = res.history.last_evaluated().unwrap();
    assert_eq!(rec.r, Some(rec.dim));
    let (a, b) = (rec.residual.unwrap(), rec.trunc_residual.unwrap());
    assert!((a - b).abs() <= 1e-10 * a);
}

#[test]
fn truncation_of_exact_zero_is_rejected() {
    let k = CMat::from_row_slice(2, 1, &[Cplx::new(1.0, 0.0), Cplx::new(0.0, 0.0)]);
    let err = truncate(&k, &k, &k, &CMat::zeros(1, 1), &TruncationPolicy::default()).unwrap_err();
    assert!(matches!(err, riccati_rk::Error::AllTruncated));
}
