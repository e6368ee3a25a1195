//! Every solver on a slowly contracting affine map `x ← A x + b`.
//!
//! Run with `cargo run --release --example linear_map`.

use daarem::{FnProblem, Method, SolverConfig};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), daarem::SolveError> {
    let p = 20;
    // spectral radius 0.99: plain iteration needs ~2000 steps
    let a = DMatrix::from_fn(
        p,
        p,
        |i, j| if i == j { 0.99 - 0.04 * i as f64 } else { 0.0 },
    );
    let b = DVector::from_fn(p, |i, _| 1.0 + i as f64);
    let target = DVector::from_fn(p, |i, _| b[i] / (1.0 - a[(i, i)]));

    let map_a = a.clone();
    let map_b = b.clone();
    let t = target.clone();
    let problem = FnProblem::new(p, move |x| &map_a * x + &map_b)
        .with_merit(move |x| -(x - &t).norm_squared());

    let x0 = DVector::zeros(p);
    let cfg = SolverConfig::default().with_tol(1e-10);
    println!(
        "{:<8} {:>6} {:>6} {:>10}",
        "method", "evals", "iters", "error"
    );
    for method in Method::ALL {
        let rep = method.solve(&problem, &x0, &cfg)?;
        println!(
            "{:<8} {:>6} {:>6} {:>10.2e}",
            method.name(),
            rep.n_map_evals,
            rep.n_iterations,
            (&rep.x_hat - &target).amax()
        );
    }
    Ok(())
}
