//! Implementing `FixedPointProblem` for your own EM algorithm: a two-component
//! Gaussian mixture with known unit variances, fitting the weight and means.
//!
//! `cargo run --release --example custom_problem`

use daarem::{solve_daarem, solve_em, FixedPointProblem, SolverConfig};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

struct Mixture {
    y: Vec<f64>,
}

fn density(y: f64, mu: f64) -> f64 {
    (-0.5 * (y - mu).powi(2)).exp()
}

impl FixedPointProblem for Mixture {
    fn dim(&self) -> usize {
        3
    }

    fn map(&self, x: &DVector<f64>) -> DVector<f64> {
        let (w, m1, m2) = (x[0], x[1], x[2]);
        let (mut sr, mut sy1, mut sy2) = (0.0, 0.0, 0.0);
        for &y in &self.y {
            let a = w * density(y, m1);
            let r = a / (a + (1.0 - w) * density(y, m2));
            sr += r;
            sy1 += r * y;
            sy2 += (1.0 - r) * y;
        }
        let n = self.y.len() as f64;
        DVector::from_vec(vec![sr / n, sy1 / sr, sy2 / (n - sr)])
    }

    fn has_merit(&self) -> bool {
        true
    }

    fn merit(&self, x: &DVector<f64>) -> f64 {
        self.y
            .iter()
            .map(|&y| (x[0] * density(y, x[1]) + (1.0 - x[0]) * density(y, x[2])).ln())
            .sum()
    }

    fn is_feasible(&self, x: &DVector<f64>) -> bool {
        x[0] > 0.0 && x[0] < 1.0
    }
}

fn main() -> Result<(), daarem::SolveError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let (a, b) = (
        Normal::new(-0.5, 1.0).unwrap(),
        Normal::new(1.0, 1.0).unwrap(),
    );
    let y = (0..1000)
        .map(|i| {
            if i % 10 < 3 {
                a.sample(&mut rng)
            } else {
                b.sample(&mut rng)
            }
        })
        .collect();
    let problem = Mixture { y };
    let x0 = DVector::from_vec(vec![0.5, -1.0, 2.0]);
    let cfg = SolverConfig::default();

    let em = solve_em(&problem, &x0, &cfg)?;
    let da = solve_daarem(&problem, &x0, &cfg)?;
    println!(
        "em     {:>6} evals  {:.5?}",
        em.n_map_evals,
        em.x_hat.as_slice()
    );
    println!(
        "daarem {:>6} evals  {:.5?}",
        da.n_map_evals,
        da.x_hat.as_slice()
    );
    Ok(())
}
