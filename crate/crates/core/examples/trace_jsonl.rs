//! Per-iteration diagnostics of a damped solve, printed as a table and
//! written as JSON lines.
//!
//! `cargo run --release --example trace_jsonl -- [out.jsonl]`

use std::fs::File;
use std::io::BufWriter;

use daarem::problems::{ProbitData, ProbitProblem};
use daarem::{solve_daarem, write_trace_jsonl, Seed, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = ProbitProblem::new(ProbitData::generate(Seed::new(1, 0), 500, 10));
    let cfg = SolverConfig::default().with_trace();
    let rep = solve_daarem(&problem, &problem.default_start(), &cfg)?;
    let trace = rep.trace.as_deref().unwrap_or_default();

    println!(
        "{:>4} {:>3} {:>3} {:>4} {:>9} {:>10} {:>11}  outcome",
        "k", "m_k", "c_k", "s_k", "delta", "lambda", "step"
    );
    for e in trace {
        println!(
            "{:>4} {:>3} {:>3} {:>4} {:>9.4} {:>10.3e} {:>11.3e}  {:?}",
            e.k,
            e.m_k,
            e.c_k,
            e.s_k,
            e.delta.unwrap_or(f64::NAN),
            e.lambda.unwrap_or(f64::NAN),
            e.step_norm,
            e.outcome
        );
    }

    if let Some(path) = std::env::args().nth(1) {
        write_trace_jsonl(trace, BufWriter::new(File::create(&path)?))?;
        println!("wrote {} lines to {path}", trace.len());
    }
    Ok(())
}
