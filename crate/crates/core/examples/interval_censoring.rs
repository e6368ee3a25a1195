//! Nonparametric MLE of a survival distribution from interval-censored
//! observations, under both feasibility rules for extrapolated masses.
//!
//! `cargo run --release --example interval_censoring`

use daarem::problems::{IcFeasibility, IcProblem, IntervalCensorData};
use daarem::{solve_daarem, solve_em, Seed, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // hand-built data: three overlapping intervals
    let small = IntervalCensorData::from_intervals(vec![(0.0, 2.0), (1.0, 3.0), (2.0, 4.0)])?;
    let problem = IcProblem::new(small);
    let fit = solve_em(&problem, &problem.default_start(), &SolverConfig::default())?;
    println!("toy masses: {:.4?}", fit.x_hat.as_slice());

    let data = IntervalCensorData::generate(Seed::new(1, 0), 300);
    println!("simulated: n = {}, support points = {}", data.n(), data.p());
    let cfg = SolverConfig::default();
    for rule in [IcFeasibility::NonNegative, IcFeasibility::PositiveMass] {
        let problem = IcProblem::new(data.clone()).with_feasibility(rule);
        let x0 = problem.default_start();
        let em = solve_em(&problem, &x0, &cfg)?;
        let da = solve_daarem(&problem, &x0, &cfg)?;
        println!(
            "{rule:?}: em {} evals, daarem {} evals ({} infeasible fallbacks), loglik diff {:.1e}",
            em.n_map_evals,
            da.n_map_evals,
            da.fallbacks.infeasible,
            da.merit_final.unwrap_or(f64::NAN) - em.merit_final.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
