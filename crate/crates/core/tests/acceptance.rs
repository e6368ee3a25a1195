//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Exits nonzero on any unexpected FAIL, and on an unexpected PASS of a
//! criterion listed in `EXPECTED_FAIL` so the list cannot go stale.

// a NaN merit counts as a violation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use daarem::bench::{run_bench, BenchSpec, MethodSpec, ProblemSpec, RECORDS_FILE};
use daarem::problems::{
    IcFeasibility, IcProblem, IntervalCensorData, MvtAlgorithm, MvtData, MvtParams, MvtProblem,
    ProbitData, ProbitProblem, SigmaPacking,
};
use daarem::{
    compute_delta, find_lambda, phi_and_derivative, ridge_gamma, solve_daarem, solve_em,
    solve_squarem, stopping_band, AndersonSolver, AndersonVariant, FixedPointProblem, FnProblem,
    Method, Seed, SolverConfig, StepOutcome, SvdFactors, TraceEntry,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;

const ALPHA: f64 = 1.2;
const KAPPA: f64 = 25.0;

const EXPECTED_FAIL: &[(u32, &str)] = &[(
    8,
    "interval censoring: with θ ≥ 0 enforced, most DAAREM extrapolations leave the simplex \
     and fall back to EM steps",
)];

/// Canonical seeded instances.
fn seed() -> Seed {
    Seed::new(1, 0)
}

fn probit() -> ProbitProblem {
    ProbitProblem::new(ProbitData::generate(seed(), 500, 10))
}

fn mvt(algorithm: MvtAlgorithm) -> MvtProblem {
    MvtProblem::new(
        MvtData::generate(seed(), 100, 5, 1.0),
        SigmaPacking::Triangle,
        algorithm,
    )
}

fn ic(feasibility: IcFeasibility) -> IcProblem {
    IcProblem::new(IntervalCensorData::generate(seed(), 300)).with_feasibility(feasibility)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> bool {
    elapsed.as_secs_f64() < limit_secs
}

fn dense_ridge_norm(f_hist: &DMatrix<f64>, f: &DVector<f64>, lambda: f64) -> f64 {
    normal_equations(f_hist, f, lambda).norm()
}

/// Root of `φ(λ) = 1/target − 1/‖s(λ)‖` by 200 bisection steps, with
/// `‖s(λ)‖` from the normal equations.
fn bisect_phi(f_hist: &DMatrix<f64>, f: &DVector<f64>, target: f64) -> f64 {
    let phi = |lambda: f64| 1.0 / target - 1.0 / dense_ridge_norm(f_hist, f, lambda);
    let mut hi = 1.0;
    while phi(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c1_damping_oracle() -> Outcome {
    let started = Instant::now();
    let mut r = rng(101);
    let mut worst_margin = f64::INFINITY;
    for i in 0..200 {
        let m = r.random_range(1..=10);
        let p = r.random_range(m + 1..=30);
        let s = r.random_range(-20i64..=40);
        let f_hist = gaussian_matrix(&mut r, p, m);
        let f = gaussian_vector(&mut r, p);
        let svd = SvdFactors::new(&f_hist, &f);
        let sol = match find_lambda(&svd, None, s, ALPHA, KAPPA) {
            Ok(sol) => sol,
            Err(e) => return check(false, format!("instance {i}: {e}")),
        };
        let (l, u) = stopping_band(s, ALPHA, KAPPA);
        let beta_ls = dense_ridge_norm(&f_hist, &f, 0.0);
        let ratio = dense_ridge_norm(&f_hist, &f, sol.lambda) / beta_ls;
        let root = bisect_phi(&f_hist, &f, compute_delta(s, ALPHA, KAPPA).sqrt() * beta_ls);
        let root_ratio = dense_ridge_norm(&f_hist, &f, root) / beta_ls;
        let tol = 1e-10;
        if !(l - tol..=u + tol).contains(&ratio) || !(l - tol..=u + tol).contains(&root_ratio) {
            return check(
                false,
                format!(
                    "instance {i}: band [{l}, {u}], find_lambda {ratio}, bisection {root_ratio}"
                ),
            );
        }
        worst_margin = worst_margin.min((ratio - l).min(u - ratio));
    }
    for (d, uf) in [(1.0, 1.0), (0.5, 3.0), (2.0, -1.0)] {
        let svd = SvdFactors::from_parts(
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, d),
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, uf),
        );
        for s in [-10i64, 0, 10, 24] {
            let delta = compute_delta(s, ALPHA, KAPPA);
            let exact = d * d * (delta.powf(-0.5) - 1.0);
            let (l, u) = stopping_band(s, ALPHA, KAPPA);
            let lam = find_lambda(&svd, None, s, ALPHA, KAPPA)
                .map(|x| x.lambda)
                .unwrap_or(f64::NAN);
            let ratio_of = |lambda: f64| d * d / (d * d + lambda);
            if !(l..=u).contains(&ratio_of(lam)) || !(l..=u).contains(&ratio_of(exact)) {
                return check(
                    false,
                    format!("scalar d={d} s={s}: λ {lam} vs closed form {exact}"),
                );
            }
        }
    }
    let elapsed = started.elapsed();
    check(
        within(elapsed, 5.0),
        format!("200 random + 12 scalar instances in band (smallest margin {worst_margin:.2e}), {elapsed:.2?} < 5 s"),
    )
}

fn c2_ridge_oracle() -> Outcome {
    let mut r = rng(102);
    let (mut worst, mut tested) = (0.0f64, 0);
    while tested < 200 {
        let m = r.random_range(1..=8);
        let p = r.random_range(m + 1..=30);
        let f_hist = gaussian_matrix(&mut r, p, m);
        let f = gaussian_vector(&mut r, p);
        if condition_number(&f_hist) > 1e3 {
            continue;
        }
        tested += 1;
        let svd = SvdFactors::new(&f_hist, &f);
        let dense = normal_equations(&f_hist, &f, 0.0);
        worst = worst.max((ridge_gamma(&svd, 0.0) - &dense).norm() / dense.norm());
        let mut prev = f64::INFINITY;
        for e in -8..=8 {
            let now = ridge_gamma(&svd, 10f64.powi(e)).norm();
            if now >= prev {
                return check(false, format!("norm not decreasing at λ = 1e{e}"));
            }
            prev = now;
        }
    }
    check(worst <= 1e-10, format!("max relative error {worst:.2e} ≤ 1e-10 over 200 instances; norms strictly decreasing on λ ∈ 1e-8..1e8"))
}

fn odds(d: f64) -> f64 {
    d / (1.0 - d)
}

fn c3_delta_schedule() -> Outcome {
    let d1 = compute_delta(0, ALPHA, KAPPA);
    let half = compute_delta(25, ALPHA, KAPPA);
    let prob = probit();
    let cfg = SolverConfig::default().with_trace();
    let trace = solve_daarem(&prob, &prob.default_start(), &cfg)
        .unwrap()
        .trace
        .unwrap();
    let steps: Vec<&TraceEntry> = trace.iter().filter(|e| e.delta.is_some()).collect();
    let (mut checked, mut worst) = (0, 0.0f64);
    for w in steps.windows(2) {
        if w[0].outcome == StepOutcome::ExtrapolatedAccepted && w[1].s_k == w[0].s_k + 1 {
            let ratio = odds(w[1].delta.unwrap()) / odds(w[0].delta.unwrap());
            worst = worst.max((ratio - ALPHA).abs() / ALPHA);
            checked += 1;
        }
    }
    check(
        (0.0103..=0.0105).contains(&d1) && half == 0.5 && checked > 0 && worst <= 1e-12,
        format!("δ₁ = {d1:.7}, δ(s=κ) = {half}, odds ratio within {worst:.1e} of α over {checked} accepted steps"),
    )
}

fn residual_norm(p: &dyn FixedPointProblem, x: &DVector<f64>) -> f64 {
    (p.map(x) - x).norm()
}

fn c4_linear_exactness() -> Outcome {
    let started = Instant::now();
    let mut r = rng(104);
    let a = symmetric_with_spectrum(&mut r, &[0.9, -0.6, 0.4, 0.2, -0.1]);
    let b = gaussian_vector(&mut r, 5);
    let prob = affine(a, b);
    let cfg = SolverConfig::default().with_order(5).with_tol(1e-300);
    let x0 = DVector::zeros(5);
    let mut solver = AndersonSolver::new(&prob, &x0, &cfg, AndersonVariant::Original).unwrap();
    let mut iterations = 1;
    while residual_norm(&prob, solver.state().x()) >= 1e-8 && iterations < 50 {
        solver.step().unwrap();
        iterations += 1;
    }
    let plain = solve_em(&prob, &x0, &SolverConfig::default().with_tol(1e-8)).unwrap();

    let scalar = FnProblem::new(1, |x| x * 0.5);
    let one = DVector::from_element(1, 1.0);
    let scfg = SolverConfig::default().with_order(1).with_tol(1e-300);
    let mut aa1 = AndersonSolver::new(&scalar, &one, &scfg, AndersonVariant::OrderOne).unwrap();
    let first = aa1.step().unwrap();
    let aa1_exact =
        first.outcome == StepOutcome::ExtrapolatedAccepted && aa1.state().x()[0].abs() < 1e-15;
    // one outer step: two map evaluations plus the stabilizing one
    let sq = solve_squarem(
        &scalar,
        &one,
        &SolverConfig::default().with_max_fevals(3).with_trace(),
    )
    .unwrap();
    let sq_exact = sq.trace.unwrap()[0].outcome == StepOutcome::ExtrapolatedAccepted
        && sq.x_hat[0].abs() < 1e-15;
    let elapsed = started.elapsed();
    check(
        iterations <= 7 && plain.n_iterations >= 150 && aa1_exact && sq_exact && within(elapsed, 1.0),
        format!(
            "AA(5) ‖f‖ < 1e-8 after {iterations} iterations, plain iteration {}; order-1 AA exact: {aa1_exact}, SQUAREM exact: {sq_exact}; {elapsed:.2?} < 1 s",
            plain.n_iterations
        ),
    )
}

fn ascent_violations(problem: &dyn FixedPointProblem, starts: &[DVector<f64>]) -> usize {
    starts
        .iter()
        .filter(|x| {
            let before = problem.merit(x);
            !(problem.merit(&problem.map(x)) >= before - 1e-10 * (1.0 + before.abs()))
        })
        .count()
}

fn c5_em_ascent() -> Outcome {
    let started = Instant::now();
    let mut r = rng(105);
    let pr = probit();
    let pr_starts: Vec<_> = (0..100)
        .map(|_| gaussian_vector(&mut r, 10) * 2.0)
        .collect();
    let mut bad = ascent_violations(&pr, &pr_starts);
    for algorithm in [MvtAlgorithm::Em, MvtAlgorithm::PxEm] {
        let mv = mvt(algorithm);
        let starts: Vec<_> = (0..100)
            .map(|_| {
                let v = gaussian_matrix(&mut r, 5, 5);
                mv.pack(&MvtParams {
                    mu: gaussian_vector(&mut r, 5),
                    sigma: &v * v.transpose() + DMatrix::identity(5, 5) * 0.1,
                })
            })
            .collect();
        bad += ascent_violations(&mv, &starts);
    }
    let icp = ic(IcFeasibility::NonNegative);
    let p = icp.data.p();
    let ic_starts: Vec<_> = (0..100)
        .map(|_| {
            let e = DVector::from_fn(p, |_, _| r.sample::<f64, _>(Exp1));
            let total = e.sum();
            e / total
        })
        .collect();
    bad += ascent_violations(&icp, &ic_starts);
    let elapsed = started.elapsed();
    check(
        bad == 0 && within(elapsed, 30.0),
        format!("{bad} violations over 400 starts (probit, mvt EM, mvt PX-EM, ic); {elapsed:.2?} < 30 s"),
    )
}

fn c6_epsilon_monotone() -> Outcome {
    let prob = probit();
    let x0 = prob.default_start();
    let mut worst = f64::INFINITY;
    let mut accepted = 0;
    let trace = solve_daarem(
        &prob,
        &x0,
        &SolverConfig::default().with_epsilon(0.01).with_trace(),
    )
    .unwrap()
    .trace
    .unwrap();
    for w in trace.windows(2) {
        if w[1].outcome == StepOutcome::ExtrapolatedAccepted {
            accepted += 1;
            worst = worst.min(w[1].merit.unwrap() - w[0].merit.unwrap());
        }
    }
    let strict = solve_daarem(
        &prob,
        &x0,
        &SolverConfig::default().with_epsilon(0.0).with_trace(),
    )
    .unwrap()
    .trace
    .unwrap();
    let worst_strict = strict
        .windows(2)
        .map(|w| w[1].merit.unwrap() - w[0].merit.unwrap())
        .fold(f64::INFINITY, f64::min);
    check(
        worst >= -0.01 - 1e-12 && worst_strict >= -1e-12,
        format!("ε = 0.01: smallest change {worst:.3e} over {accepted} accepted steps; ε = 0: smallest change {worst_strict:.3e}"),
    )
}

fn c7_cross_method() -> Outcome {
    let started = Instant::now();
    let cases: Vec<(&str, Box<dyn FixedPointProblem + Sync>, DVector<f64>)> = vec![
        ("probit", Box::new(probit()), probit().default_start()),
        (
            "mvt",
            Box::new(mvt(MvtAlgorithm::Em)),
            mvt(MvtAlgorithm::Em).default_start(),
        ),
        (
            "ic",
            Box::new(ic(IcFeasibility::NonNegative)),
            ic(IcFeasibility::NonNegative).default_start(),
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, problem, x0) in &cases {
        let mut values = Vec::new();
        for method in Method::ALL {
            match method.solve(problem.as_ref(), x0, &SolverConfig::default()) {
                Ok(rep) if rep.converged => values.push(-rep.merit_final.unwrap()),
                Ok(_) => {
                    pass = false;
                    parts.push(format!("{name}/{method} hit the cap"));
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("{name}/{method}: {e}"));
                }
            }
        }
        let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - values.iter().cloned().fold(f64::INFINITY, f64::min);
        pass &= spread < 1e-4;
        parts.push(format!("{name} spread {spread:.1e}"));
    }
    let elapsed = started.elapsed();
    pass &= within(elapsed, 120.0);
    check(pass, format!("{}; {elapsed:.2?} < 2 min", parts.join(", ")))
}

fn c8_speedup() -> Outcome {
    let cfg = SolverConfig::default();
    let pr = probit();
    let x0 = pr.default_start();
    let evals = |m: Method, p: &dyn FixedPointProblem, x: &DVector<f64>| {
        m.solve(p, x, &cfg)
            .map(|r| r.n_map_evals)
            .unwrap_or(usize::MAX)
    };
    let (da, sq, em) = (
        evals(Method::Daarem, &pr, &x0),
        evals(Method::Squarem, &pr, &x0),
        evals(Method::Em, &pr, &x0),
    );
    let probit_ok = 2 * da <= sq && 5 * da <= em;

    let strict = ic(IcFeasibility::NonNegative);
    let y0 = strict.default_start();
    let ic_da = solve_daarem(&strict, &y0, &cfg).unwrap();
    let ic_em = evals(Method::Em, &strict, &y0);
    let ic_ok = 10 * ic_da.n_map_evals <= ic_em;

    let loose = ic(IcFeasibility::PositiveMass);
    let loose_da = evals(Method::Daarem, &loose, &y0);
    check(
        probit_ok && ic_ok,
        format!(
            "probit daarem {da} vs squarem {sq}, em {em}; ic daarem {} ({} infeasible fallbacks) vs em {ic_em}, ratio {:.3} (needs ≤ 0.1; positive-mass rule would give {loose_da}, ratio {:.3})",
            ic_da.n_map_evals,
            ic_da.fallbacks.infeasible,
            ic_da.n_map_evals as f64 / ic_em as f64,
            loose_da as f64 / ic_em as f64
        ),
    )
}

fn c9_px_em() -> Outcome {
    let cfg = SolverConfig::default();
    let em = mvt(MvtAlgorithm::Em);
    let px = mvt(MvtAlgorithm::PxEm);
    let r_em = solve_em(&em, &em.default_start(), &cfg).unwrap();
    let r_px = solve_em(&px, &px.default_start(), &cfg).unwrap();
    check(
        r_em.converged && r_px.converged && 5 * r_px.n_map_evals <= r_em.n_map_evals,
        format!(
            "PX-EM {} vs EM {} map evaluations",
            r_px.n_map_evals, r_em.n_map_evals
        ),
    )
}

fn c10_cadence() -> Outcome {
    let pr = probit();
    let x0 = pr.default_start();
    let mut problems = Vec::new();
    let mut steps = 0;
    for m in [1usize, 3, 5] {
        let cfg = SolverConfig::default().with_order(m).with_trace();
        let floor = cfg.damping_floor_for(m);
        for variant in [AndersonVariant::Restarted, AndersonVariant::Damped] {
            let mut solver = AndersonSolver::new(&pr, &x0, &cfg, variant).unwrap();
            while !solver.is_converged() && steps < 100_000 {
                let e = solver.step().unwrap();
                steps += 1;
                let cols = solver.state().history().len();
                let fresh_cycle = (e.k - 1).is_multiple_of(m);
                if e.m_k != m.min(e.c_k)
                    || cols != e.m_k
                    || (e.c_k == 1) != fresh_cycle
                    || e.s_k < -floor
                {
                    problems.push(format!(
                        "{variant:?} m={m} k={}: m_k {} c_k {} cols {cols} s_k {}",
                        e.k, e.m_k, e.c_k, e.s_k
                    ));
                }
            }
            let trace = solver.into_report().trace.unwrap();
            if trace.iter().any(|e| e.s_k < -floor) {
                problems.push(format!("{variant:?} m={m}: s below −D"));
            }
        }
    }
    check(
        problems.is_empty(),
        match problems.first() {
            Some(p) => p.clone(),
            None => format!("m_k = min(m, c_k), resets every m, s ≥ −D, history columns = m_k over {steps} steps"),
        },
    )
}

fn c11_phi_derivative() -> Outcome {
    let mut r = rng(111);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = r.random_range(1..=10);
        let p = r.random_range(2..=30);
        let f_hist = gaussian_matrix(&mut r, p, m);
        let f = gaussian_vector(&mut r, p);
        let svd = SvdFactors::new(&f_hist, &f);
        let v = r.random_range(0.05..0.95) * svd.beta_ls_norm();
        let lambda = 10f64.powf(r.random_range(-3.0..2.0));
        let h = 1e-6 * (1.0 + lambda);
        let phi = |l: f64| phi_and_derivative(&svd, v, l).unwrap();
        let fd = (phi(lambda + h).phi - phi(lambda - h).phi) / (2.0 * h);
        worst = worst.max((phi(lambda).dphi - fd).abs());
    }
    check(
        worst <= 1e-5,
        format!("max |φ′ − central difference| = {worst:.2e} over 100 instances"),
    )
}

fn c12_bench_determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut outputs = Vec::new();
    for (dir, jobs) in dirs.iter().zip([1, 0]) {
        let mut spec = BenchSpec::new(
            ProblemSpec::probit(200, 5),
            Method::ALL.iter().map(|&m| MethodSpec::new(m)).collect(),
        );
        spec.reps = 3;
        spec.jobs = jobs;
        spec.out = Some(dir.path().to_path_buf());
        run_bench(&spec).unwrap();
        let text = std::fs::read_to_string(dir.path().join(RECORDS_FILE)).unwrap();
        let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
        let wall = header.iter().position(|h| *h == "wall_seconds").unwrap();
        let stripped: Vec<String> = text
            .lines()
            .map(|l| {
                l.split(',')
                    .enumerate()
                    .filter(|(i, _)| *i != wall)
                    .map(|(_, v)| v)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        outputs.push(stripped);
    }
    check(
        outputs[0] == outputs[1],
        format!(
            "{} records identical modulo wall_seconds (1 worker vs all cores)",
            outputs[0].len() - 1
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, "damping-solver oracle equivalence", c1_damping_oracle),
        (2, "ridge/LS oracle equivalence", c2_ridge_oracle),
        (3, "δ-schedule", c3_delta_schedule),
        (4, "linear-map exactness", c4_linear_exactness),
        (5, "EM ascent suites", c5_em_ascent),
        (6, "ε-monotonicity of DAAREM", c6_epsilon_monotone),
        (7, "cross-method agreement", c7_cross_method),
        (8, "speedup ordering", c8_speedup),
        (9, "PX-EM speedup", c9_px_em),
        (10, "restart cadence and state invariants", c10_cadence),
        (11, "φ′ finite-difference check", c11_phi_derivative),
        (12, "benchmark determinism", c12_bench_determinism),
    ];
    let (mut passed, mut failed, mut expected, mut surprises) = (0, 0, 0, 0);
    for (id, name, run) in criteria {
        let outcome = run();
        let known = EXPECTED_FAIL
            .iter()
            .find(|(i, _)| *i == id)
            .map(|(_, why)| *why);
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        match (outcome.pass, known) {
            (true, None) => passed += 1,
            (false, Some(_)) => {
                failed += 1;
                expected += 1;
            }
            (true, Some(_)) | (false, None) => {
                if outcome.pass {
                    passed += 1;
                } else {
                    failed += 1;
                }
                surprises += 1;
            }
        }
        let note = match (outcome.pass, known) {
            (false, Some(why)) => format!(" [expected: {why}]"),
            (true, Some(_)) => " [UNEXPECTED PASS: update EXPECTED_FAIL]".to_string(),
            _ => String::new(),
        };
        println!("{tag} {id:>2} {name}: {}{note}", outcome.detail);
    }
    println!("acceptance: {passed} passed, {failed} failed ({expected} expected), {surprises} unexpected");
    if surprises == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
