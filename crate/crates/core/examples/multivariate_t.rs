//! Location and scatter of a multivariate t sample with EM and PX-EM maps,
//! each with and without damped Anderson acceleration.
//!
//! `cargo run --release --example multivariate_t`

use daarem::problems::{MvtAlgorithm, MvtData, MvtProblem, SigmaPacking};
use daarem::{solve_daarem, solve_em, Seed, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = MvtData::generate(Seed::new(1, 0), 100, 5, 1.0);
    let cfg = SolverConfig::default();
    for algorithm in [MvtAlgorithm::Em, MvtAlgorithm::PxEm] {
        let problem = MvtProblem::new(data.clone(), SigmaPacking::Triangle, algorithm);
        let x0 = problem.default_start();
        let plain = solve_em(&problem, &x0, &cfg)?;
        let accel = solve_daarem(&problem, &x0, &cfg)?;
        println!(
            "{algorithm:?}: plain {} evals, daarem {} evals, loglik {:.6} / {:.6}",
            plain.n_map_evals,
            accel.n_map_evals,
            plain.merit_final.unwrap_or(f64::NAN),
            accel.merit_final.unwrap_or(f64::NAN),
        );
        let fit = problem.unpack(&accel.x_hat)?;
        println!("  mu = {:.4?}", fit.mu.as_slice());
    }
    Ok(())
}
