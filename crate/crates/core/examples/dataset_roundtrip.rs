//! Writing a generated dataset to the plain-text format and fitting the copy
//! read back from it.
//!
//! `cargo run --example dataset_roundtrip`

use std::io::Cursor;

use daarem::problems::{Dataset, DatasetHeader, IcProblem, IntervalCensorData};
use daarem::{solve_daarem, Seed, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = Seed::new(5, 2);
    let dataset = Dataset::Ic(IntervalCensorData::generate(seed, 40));
    let mut text = Vec::new();
    dataset.write(&DatasetHeader::seeded(seed), &mut text)?;
    let text = String::from_utf8(text)?;
    for line in text.lines().take(8) {
        println!("{line}");
    }

    let (copy, header) = Dataset::read(Cursor::new(text.as_bytes()))?;
    println!("read back a {} dataset, header {:?}", copy.kind(), header);
    if let Dataset::Ic(data) = copy {
        let problem = IcProblem::new(data);
        let rep = solve_daarem(&problem, &problem.default_start(), &SolverConfig::default())?;
        println!(
            "loglik {:.6} after {} evals",
            rep.merit_final.unwrap_or(f64::NAN),
            rep.n_map_evals
        );
    }
    Ok(())
}
