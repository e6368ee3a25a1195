//! Probit regression fitted through its EM map, plain and accelerated.
//!
//! `cargo run --release --example probit_regression -- [n] [p]`

use daarem::problems::{ProbitData, ProbitProblem};
use daarem::{solve_daarem, solve_em, solve_squarem, Seed, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(500);
    let p: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);

    let data = ProbitData::generate(Seed::new(1, 0), n, p);
    let beta_true = data.beta_true().cloned();
    let problem = ProbitProblem::new(data);
    let x0 = problem.default_start();
    let cfg = SolverConfig::default();

    let em = solve_em(&problem, &x0, &cfg)?;
    let sq = solve_squarem(&problem, &x0, &cfg)?;
    let da = solve_daarem(&problem, &x0, &cfg)?;
    for (name, r) in [("em", &em), ("squarem", &sq), ("daarem", &da)] {
        println!(
            "{name:<8} evals {:>6}  loglik {:.8}  converged {}",
            r.n_map_evals,
            r.merit_final.unwrap_or(f64::NAN),
            r.converged
        );
    }
    println!("daarem fallbacks: {:?}", da.fallbacks);
    if let Some(beta) = beta_true {
        println!(
            "max |beta_hat - beta_true| = {:.3}",
            (&da.x_hat - beta).amax()
        );
    }
    Ok(())
}
