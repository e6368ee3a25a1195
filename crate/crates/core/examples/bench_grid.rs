//! The benchmark harness from library code: a small replicated comparison
//! with per-method overrides, written to a directory and summarized.
//!
//! `cargo run --release --example bench_grid -- [out_dir]`

use daarem::bench::{parse_methods, run_bench, summarize, BenchSpec, ProblemSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let methods = parse_methods("em,squarem,daarem,daarem:eps=0,qnz:q=2")?;
    let mut spec = BenchSpec::new(ProblemSpec::probit(300, 5), methods);
    spec.reps = 4;
    spec.seed = 3;
    spec.config.max_fevals = 100_000;
    spec.out = std::env::args().nth(1).map(Into::into);

    let records = run_bench(&spec)?;
    println!(
        "{:<14} {:>5} {:>10} {:>10}",
        "method", "conv", "evals", "-loglik"
    );
    for s in summarize(&records) {
        println!(
            "{:<14} {:>2}/{:<2} {:>10.1} {:>10.4}",
            s.method,
            s.converged,
            s.runs,
            s.map_evals.mean,
            s.mean_negative_loglik.unwrap_or(f64::NAN)
        );
    }
    if let Some(dir) = &spec.out {
        println!("records.csv and summary.json in {}", dir.display());
    }
    Ok(())
}
