//! The damping pieces on their own: the δ schedule, its stopping band and a
//! `find_lambda` solve on a small least-squares problem.
//!
//! `cargo run --example damping_schedule`

use daarem::{compute_delta, find_lambda, stopping_band, SvdFactors};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), daarem::DampingError> {
    let (alpha, kappa) = (1.2, 25.0);
    println!(
        "{:>4} {:>10} {:>10} {:>10}",
        "s", "delta", "l_stop", "u_stop"
    );
    for s in [-10, 0, 10, 25, 40] {
        let (l, u) = stopping_band(s, alpha, kappa);
        println!(
            "{s:>4} {:>10.6} {l:>10.6} {u:>10.6}",
            compute_delta(s, alpha, kappa)
        );
    }

    let f_hist = DMatrix::from_row_slice(4, 2, &[1.0, 0.2, 0.0, 1.0, 0.5, 0.5, 0.1, -0.3]);
    let f = DVector::from_vec(vec![1.0, 2.0, 0.5, -1.0]);
    let svd = SvdFactors::new(&f_hist, &f);
    let mut warm = None;
    for s in [0, 10, 20] {
        let sol = find_lambda(&svd, warm, s, alpha, kappa)?;
        println!(
            "s = {s:>2}: lambda = {:.6}, |s(lambda)|/|beta_ls| = {:.6} after {} Newton steps",
            sol.lambda,
            svd.ridge_norm(sol.lambda) / svd.beta_ls_norm(),
            sol.n_newton_steps
        );
        warm = Some(sol.warm_start());
    }
    Ok(())
}
