use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use daarem::bench::{parse_methods, run_bench, summarize, BenchError, BenchSpec, ProblemSpec};
use daarem::problems::{DatasetHeader, IcFeasibility, MvtAlgorithm, SigmaPacking};
use daarem::{Seed, SolverConfig};

#[derive(Parser)]
#[command(
    name = "bench",
    about = "Compare fixed-point accelerators on simulated EM problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a method x replication grid and write records.csv and summary.json.
    Run(RunArgs),
    /// Write one replication's dataset as a self-describing text file.
    Dump(DumpArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    Probit,
    Mvt,
    Ic,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long, value_enum)]
    problem: ProblemKind,
    /// Observations [default: probit 500, mvt 100, ic 300]
    #[arg(long)]
    n: Option<usize>,
    /// Probit regressors
    #[arg(long, default_value_t = 10)]
    p: usize,
    /// Multivariate-t dimension
    #[arg(long, default_value_t = 5)]
    q: usize,
    /// Multivariate-t degrees of freedom
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, value_enum, default_value = "triangle")]
    sigma_packing: Packing,
    #[arg(long, value_enum, default_value = "em")]
    mvt_algorithm: MvtMap,
    #[arg(long, value_enum, default_value = "non-negative")]
    ic_feasibility: IcRule,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Packing {
    Triangle,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum MvtMap {
    Em,
    PxEm,
}

#[derive(Clone, Copy, ValueEnum)]
enum IcRule {
    NonNegative,
    PositiveMass,
}

impl DesignArgs {
    fn spec(&self) -> ProblemSpec {
        match self.problem {
            ProblemKind::Probit => ProblemSpec::probit(self.n.unwrap_or(500), self.p),
            ProblemKind::Mvt => ProblemSpec::Mvt {
                n: self.n.unwrap_or(100),
                q: self.q,
                nu: self.nu,
                packing: match self.sigma_packing {
                    Packing::Triangle => SigmaPacking::Triangle,
                    Packing::Full => SigmaPacking::Full,
                },
                algorithm: match self.mvt_algorithm {
                    MvtMap::Em => MvtAlgorithm::Em,
                    MvtMap::PxEm => MvtAlgorithm::PxEm,
                },
            },
            ProblemKind::Ic => ProblemSpec::Ic {
                n: self.n.unwrap_or(300),
                feasibility: match self.ic_feasibility {
                    IcRule::NonNegative => IcFeasibility::NonNegative,
                    IcRule::PositiveMass => IcFeasibility::PositiveMass,
                },
            },
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Comma-separated methods, each optionally `name:key=value,...`
    #[arg(long, default_value = "em,aa,raa,aa1,daarem,squarem,qnz")]
    methods: String,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// History length m (q for qnz); default depends on the dimension
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.0)]
    epsilon_c: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 25_000)]
    max_fevals: usize,
    /// Worker threads; 0 uses every core
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// File of whitespace-separated starting values, used for every replication
    #[arg(long)]
    start: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Also write trace-<method>-<rep>.jsonl per run
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Replication index (RNG stream)
    #[arg(long, default_value_t = 0)]
    rep: u64,
    #[arg(long)]
    out: PathBuf,
}

fn run(args: RunArgs) -> Result<(), Box<dyn std::error::Error>> {
    let start = match &args.start {
        Some(path) => Some(
            fs::read_to_string(path)?
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let mut config = SolverConfig::default()
        .with_epsilon(args.epsilon)
        .with_tol(args.tol)
        .with_max_fevals(args.max_fevals);
    config.order = args.order;
    config.epsilon_c = args.epsilon_c;
    let spec = BenchSpec {
        problem: args.design.spec(),
        methods: parse_methods(&args.methods)?,
        reps: args.reps,
        seed: args.design.seed,
        config,
        start,
        jobs: args.jobs,
        out: Some(args.out.clone()),
        trace: args.trace,
    };
    let records = run_bench(&spec)?;
    println!(
        "{:<20} {:>9} {:>10} {:>10} {:>10} {:>16}",
        "method", "converged", "evals_mean", "evals_med", "evals_sd", "mean_-logL"
    );
    for s in summarize(&records) {
        println!(
            "{:<20} {:>9.2} {:>10.1} {:>10.1} {:>10.1} {:>16.6}",
            s.method,
            s.proportion_converged,
            s.map_evals.mean,
            s.map_evals.median,
            s.map_evals.sd,
            s.mean_negative_loglik.unwrap_or(f64::NAN)
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn dump(args: DumpArgs) -> Result<(), Box<dyn std::error::Error>> {
    let seed = Seed::new(args.design.seed, args.rep);
    let problem = args.design.spec().build(seed);
    let file = fs::File::create(&args.out)?;
    problem
        .dataset()
        .write(&DatasetHeader::seeded(seed), BufWriter::new(file))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Dump(args) => dump(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.downcast_ref::<BenchError>() {
                Some(BenchError::InvalidSpec(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
