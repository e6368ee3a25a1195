//! Replicated method comparisons on simulated datasets.
//!
//! A [`BenchSpec`] names a problem design, a list of methods and a number of
//! replications. Replication `r` regenerates its dataset from
//! `Seed::new(seed, r)`, so every method sees the same data and start, and
//! any replication can be rerun alone. Records go to `records.csv` as
//! replications finish, which lets an interrupted run resume; the file is
//! rewritten in sorted order at the end together with `summary.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::mpsc;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::SolveError;
use crate::method::Method;
use crate::problem::FixedPointProblem;
use crate::problems::{
    Dataset, IcFeasibility, IcProblem, IntervalCensorData, MvtAlgorithm, MvtData, MvtProblem,
    ProbitData, ProbitProblem, SigmaPacking,
};
use crate::report::{write_trace_jsonl, SolveReport};
use crate::rng::{Seed, GENERATOR};

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.json";

const ACCOUNTING_NOTE: &str = "n_map_evals counts every evaluation of the map, including the \
    initial step, both evaluations of each SQUAREM and QN-Z outer step and the SQUAREM \
    stabilizing step; n_iterations counts outer iterations.";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Simulation design for one problem family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemSpec {
    Probit {
        n: usize,
        p: usize,
    },
    Mvt {
        n: usize,
        q: usize,
        nu: f64,
        packing: SigmaPacking,
        algorithm: MvtAlgorithm,
    },
    Ic {
        n: usize,
        feasibility: IcFeasibility,
    },
}

impl ProblemSpec {
    pub fn probit(n: usize, p: usize) -> Self {
        ProblemSpec::Probit { n, p }
    }

    pub fn mvt(n: usize, q: usize, nu: f64) -> Self {
        ProblemSpec::Mvt {
            n,
            q,
            nu,
            packing: SigmaPacking::default(),
            algorithm: MvtAlgorithm::default(),
        }
    }

    pub fn ic(n: usize) -> Self {
        ProblemSpec::Ic {
            n,
            feasibility: IcFeasibility::default(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Probit { .. } => "probit",
            ProblemSpec::Mvt { .. } => "mvt",
            ProblemSpec::Ic { .. } => "ic",
        }
    }

    pub fn build(&self, seed: Seed) -> BenchProblem {
        match *self {
            ProblemSpec::Probit { n, p } => {
                BenchProblem::Probit(ProbitProblem::new(ProbitData::generate(seed, n, p)))
            }
            ProblemSpec::Mvt {
                n,
                q,
                nu,
                packing,
                algorithm,
            } => BenchProblem::Mvt(MvtProblem::new(
                MvtData::generate(seed, n, q, nu),
                packing,
                algorithm,
            )),
            ProblemSpec::Ic { n, feasibility } => BenchProblem::Ic(
                IcProblem::new(IntervalCensorData::generate(seed, n)).with_feasibility(feasibility),
            ),
        }
    }

    fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: &str| Err(BenchError::InvalidSpec(msg.into()));
        match *self {
            ProblemSpec::Probit { n, p } if p == 0 || n <= p => bad("probit needs 0 < p < n"),
            ProblemSpec::Mvt { n, q, nu, .. } if q == 0 || n <= q || !(nu > 0.0) => {
                bad("mvt needs 0 < q < n and nu > 0")
            }
            ProblemSpec::Ic { n: 0, .. } => bad("ic needs n > 0"),
            _ => Ok(()),
        }
    }
}

/// A generated instance of a [`ProblemSpec`].
#[derive(Debug, Clone)]
pub enum BenchProblem {
    Probit(ProbitProblem),
    Mvt(MvtProblem),
    Ic(IcProblem),
}

impl BenchProblem {
    pub fn as_problem(&self) -> &(dyn FixedPointProblem + Sync) {
        match self {
            BenchProblem::Probit(p) => p,
            BenchProblem::Mvt(p) => p,
            BenchProblem::Ic(p) => p,
        }
    }

    pub fn dataset(&self) -> Dataset {
        match self {
            BenchProblem::Probit(p) => Dataset::Probit(p.data.clone()),
            BenchProblem::Mvt(p) => Dataset::Mvt(p.data.clone()),
            BenchProblem::Ic(p) => Dataset::Ic(p.data.clone()),
        }
    }
}

/// Starting point shared by all methods: zeros for probit, the sample mean
/// and sample covariance plus `10⁻³·I` for the multivariate t, and uniform
/// masses for interval censoring.
pub fn default_start(problem: &BenchProblem) -> DVector<f64> {
    match problem {
        BenchProblem::Probit(p) => p.default_start(),
        BenchProblem::Mvt(p) => p.default_start(),
        BenchProblem::Ic(p) => p.default_start(),
    }
}

/// A method plus per-method overrides, written `name[:key=value,...]` with
/// keys `m`/`q`/`order`, `eps`/`epsilon` and `epsc`/`epsilon_c`, e.g.
/// `daarem:eps=0` or `qnz:q=3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub label: String,
    pub method: Method,
    pub order: Option<usize>,
    pub epsilon: Option<f64>,
    pub epsilon_c: Option<f64>,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self {
            label: method.name().to_string(),
            method,
            order: None,
            epsilon: None,
            epsilon_c: None,
        }
    }

    pub fn config(&self, base: &SolverConfig) -> SolverConfig {
        let mut cfg = base.clone();
        if let Some(m) = self.order {
            cfg.order = Some(m);
        }
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        if let Some(e) = self.epsilon_c {
            cfg.epsilon_c = e;
        }
        cfg
    }
}

impl FromStr for MethodSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, opts) = s.split_once(':').unwrap_or((s, ""));
        let method: Method = name
            .parse()
            .map_err(|e: crate::method::UnknownMethod| BenchError::InvalidSpec(e.to_string()))?;
        let mut spec = MethodSpec::new(method);
        spec.label = s.to_string();
        for opt in opts.split(',').filter(|o| !o.is_empty()) {
            let (key, value) = opt.split_once('=').ok_or_else(|| {
                BenchError::InvalidSpec(format!("option `{opt}` is not key=value"))
            })?;
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| BenchError::InvalidSpec(format!("bad value in `{opt}`")))
            };
            match key {
                "m" | "q" | "order" => {
                    spec.order =
                        Some(value.parse().map_err(|_| {
                            BenchError::InvalidSpec(format!("bad value in `{opt}`"))
                        })?)
                }
                "eps" | "epsilon" => spec.epsilon = Some(num(value)?),
                "epsc" | "epsilon_c" => spec.epsilon_c = Some(num(value)?),
                _ => {
                    return Err(BenchError::InvalidSpec(format!(
                        "unknown method option `{key}`"
                    )))
                }
            }
        }
        Ok(spec)
    }
}

/// Parse a list such as `em,aa,daarem:eps=0,m=4,qnz:q=3`. A piece that does
/// not start with a method name continues the options of the previous one.
pub fn parse_methods(list: &str) -> Result<Vec<MethodSpec>, BenchError> {
    let mut specs: Vec<String> = Vec::new();
    for piece in list.split([',', ' ']).filter(|p| !p.is_empty()) {
        let starts_method = Method::from_str(piece.split(':').next().unwrap_or("")).is_ok();
        match specs.last_mut() {
            Some(last) if !starts_method && last.contains(':') => {
                last.push(',');
                last.push_str(piece);
            }
            _ => specs.push(piece.to_string()),
        }
    }
    specs.iter().map(|s| s.parse()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub problem: ProblemSpec,
    pub methods: Vec<MethodSpec>,
    pub reps: usize,
    pub seed: u64,
    /// Order, ε, ε_c, tolerance and evaluation cap shared by all methods.
    pub config: SolverConfig,
    /// Overrides [`default_start`] when set.
    pub start: Option<Vec<f64>>,
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub trace: bool,
}

impl BenchSpec {
    pub fn new(problem: ProblemSpec, methods: Vec<MethodSpec>) -> Self {
        Self {
            problem,
            methods,
            reps: 20,
            seed: 1,
            config: SolverConfig::default(),
            start: None,
            jobs: 0,
            out: None,
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.methods.is_empty() {
            return Err(BenchError::InvalidSpec("no methods given".into()));
        }
        if self.reps == 0 {
            return Err(BenchError::InvalidSpec(
                "at least one replication is required".into(),
            ));
        }
        let labels: BTreeSet<&str> = self.methods.iter().map(|m| m.label.as_str()).collect();
        if labels.len() != self.methods.len() {
            return Err(BenchError::InvalidSpec("duplicate method".into()));
        }
        if self.trace && self.out.is_none() {
            return Err(BenchError::InvalidSpec(
                "traces need an output directory".into(),
            ));
        }
        self.problem.validate()?;
        for m in &self.methods {
            m.config(&self.config)
                .validate()
                .map_err(|e| BenchError::InvalidSpec(format!("{}: {e}", m.label)))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub replication: usize,
    pub seed: u64,
    pub method: String,
    pub converged: bool,
    pub n_map_evals: usize,
    pub n_iterations: usize,
    pub n_fallbacks: usize,
    pub wall_seconds: f64,
    /// `NaN` when the run failed or has no merit.
    pub final_negative_loglik: f64,
}

impl BenchRecord {
    fn from_result(
        replication: usize,
        seed: u64,
        method: &str,
        result: &Result<SolveReport, SolveError>,
        wall_seconds: f64,
    ) -> Self {
        let (converged, n_map_evals, n_iterations, n_fallbacks, nll) = match result {
            Ok(r) => (
                r.converged,
                r.n_map_evals,
                r.n_iterations,
                r.n_fallbacks,
                r.merit_final.map_or(f64::NAN, |m| -m),
            ),
            Err(SolveError::NonFiniteIterate {
                iteration,
                n_map_evals,
            }) => (false, *n_map_evals, *iteration, 0, f64::NAN),
            Err(_) => (false, 0, 0, 0, f64::NAN),
        };
        Self {
            replication,
            seed,
            method: method.to_string(),
            converged,
            n_map_evals,
            n_iterations,
            n_fallbacks,
            wall_seconds: wall_seconds.max(f64::MIN_POSITIVE),
            final_negative_loglik: nll,
        }
    }
}

fn trace_file_name(label: &str, rep: usize) -> String {
    let safe: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("trace-{safe}-{rep}.jsonl")
}

/// Run every method on replication `rep` of the spec.
pub fn run_replication(spec: &BenchSpec, rep: usize) -> Result<Vec<BenchRecord>, BenchError> {
    let problem = spec.problem.build(Seed::new(spec.seed, rep as u64));
    let x0 = match &spec.start {
        Some(v) => DVector::from_column_slice(v),
        None => default_start(&problem),
    };
    let mut records = Vec::with_capacity(spec.methods.len());
    for m in &spec.methods {
        let mut cfg = m.config(&spec.config);
        cfg.record_trace = spec.trace;
        let started = Instant::now();
        let result = m.method.solve(problem.as_problem(), &x0, &cfg);
        let wall = started.elapsed().as_secs_f64();
        if let (
            Some(dir),
            Ok(SolveReport {
                trace: Some(trace), ..
            }),
        ) = (&spec.out, &result)
        {
            let file = File::create(dir.join(trace_file_name(&m.label, rep)))?;
            write_trace_jsonl(trace, BufWriter::new(file))?;
        }
        records.push(BenchRecord::from_result(
            rep, spec.seed, &m.label, &result, wall,
        ));
    }
    Ok(records)
}

pub fn read_records(path: &Path) -> Result<Vec<BenchRecord>, BenchError> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<Result<_, _>>()?)
}

pub fn write_records(path: &Path, records: &[BenchRecord]) -> Result<(), BenchError> {
    let mut writer = csv::Writer::from_path(path)?;
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

/// Replications already fully present in a previous `records.csv`.
fn completed(spec: &BenchSpec, path: &Path) -> Result<Vec<BenchRecord>, BenchError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let previous = read_records(path)?;
    let mut by_rep: BTreeMap<usize, Vec<BenchRecord>> = BTreeMap::new();
    for r in previous
        .into_iter()
        .filter(|r| r.seed == spec.seed && r.replication < spec.reps)
    {
        by_rep.entry(r.replication).or_default().push(r);
    }
    Ok(by_rep
        .into_values()
        .filter(|recs| {
            spec.methods
                .iter()
                .all(|m| recs.iter().filter(|r| r.method == m.label).count() == 1)
                && recs.len() == spec.methods.len()
        })
        .flatten()
        .collect())
}

/// Run the whole grid; returns records sorted by replication, then by the
/// order of `spec.methods`.
pub fn run_bench(spec: &BenchSpec) -> Result<Vec<BenchRecord>, BenchError> {
    spec.validate()?;
    let records_path = spec.out.as_ref().map(|d| d.join(RECORDS_FILE));
    let mut records = match (&spec.out, &records_path) {
        (Some(dir), Some(path)) => {
            fs::create_dir_all(dir)?;
            let done = completed(spec, path)?;
            // drop partial replications before appending
            write_records(path, &done)?;
            done
        }
        _ => Vec::new(),
    };
    let done: BTreeSet<usize> = records.iter().map(|r| r.replication).collect();
    let pending: Vec<usize> = (0..spec.reps).filter(|r| !done.contains(r)).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| BenchError::InvalidSpec(e.to_string()))?;
    let (tx, rx) = mpsc::channel::<Result<Vec<BenchRecord>, BenchError>>();
    let collected = std::thread::scope(|scope| {
        let collector = scope.spawn(|| -> Result<Vec<BenchRecord>, BenchError> {
            let mut writer = match &records_path {
                Some(path) => {
                    let file = OpenOptions::new().append(true).open(path)?;
                    let needs_header = file.metadata()?.len() == 0;
                    Some(
                        csv::WriterBuilder::new()
                            .has_headers(needs_header)
                            .from_writer(file),
                    )
                }
                None => None,
            };
            let mut fresh = Vec::new();
            for batch in rx {
                let batch = batch?;
                if let Some(w) = writer.as_mut() {
                    for r in &batch {
                        w.serialize(r)?;
                    }
                    w.flush()?;
                }
                fresh.extend(batch);
            }
            Ok(fresh)
        });
        pool.install(|| {
            pending.par_iter().for_each_with(tx, |tx, &rep| {
                // the collector only stops early on an I/O error, which
                // it reports itself
                let _ = tx.send(run_replication(spec, rep));
            });
        });
        collector.join().expect("collector thread panicked")
    })?;
    records.extend(collected);

    let rank: BTreeMap<&str, usize> = spec
        .methods
        .iter()
        .enumerate()
        .map(|(i, m)| (m.label.as_str(), i))
        .collect();
    records.sort_by_key(|r| (r.replication, rank.get(r.method.as_str()).copied()));

    if let (Some(dir), Some(path)) = (&spec.out, &records_path) {
        write_records(path, &records)?;
        let summary = BenchSummary::new(spec, &records);
        let file = File::create(dir.join(SUMMARY_FILE))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &summary)?;
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, median, sd })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub runs: usize,
    pub converged: usize,
    pub proportion_converged: f64,
    /// Over all runs, including those stopped by the evaluation cap.
    pub map_evals: Stats,
    pub iterations: Stats,
    pub wall_seconds: Stats,
    /// Over converged runs only; `None` if none converged.
    pub mean_negative_loglik: Option<f64>,
}

/// Per-method statistics, in order of first appearance.
pub fn summarize(records: &[BenchRecord]) -> Vec<MethodSummary> {
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.method.as_str()) {
            order.push(&r.method);
        }
    }
    order
        .into_iter()
        .map(|method| {
            let runs: Vec<&BenchRecord> = records.iter().filter(|r| r.method == method).collect();
            let column = |f: fn(&BenchRecord) -> f64| -> Stats {
                Stats::of(&runs.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("nonempty group")
            };
            let nll: Vec<f64> = runs
                .iter()
                .filter(|r| r.converged && r.final_negative_loglik.is_finite())
                .map(|r| r.final_negative_loglik)
                .collect();
            let converged = runs.iter().filter(|r| r.converged).count();
            MethodSummary {
                method: method.to_string(),
                runs: runs.len(),
                converged,
                proportion_converged: converged as f64 / runs.len() as f64,
                map_evals: column(|r| r.n_map_evals as f64),
                iterations: column(|r| r.n_iterations as f64),
                wall_seconds: column(|r| r.wall_seconds),
                mean_negative_loglik: Stats::of(&nll).map(|s| s.mean),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchSummary {
    pub problem: ProblemSpec,
    /// Length of the parameter vector the solvers work on, from replication 0.
    pub parameter_count: usize,
    pub reps: usize,
    pub seed: u64,
    pub generator: String,
    pub config: SolverConfig,
    pub accounting: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub packing_note: Option<String>,
    pub methods: Vec<MethodSummary>,
}

impl BenchSummary {
    pub fn new(spec: &BenchSpec, records: &[BenchRecord]) -> Self {
        let packing_note = match spec.problem {
            ProblemSpec::Mvt { q, packing, .. } => Some(format!(
                "Sigma packed as {}: {} entries for q={q} (lower triangle {}, full matrix {})",
                match packing {
                    SigmaPacking::Triangle => "its lower triangle",
                    SigmaPacking::Full => "the full matrix",
                },
                packing.len(q),
                SigmaPacking::Triangle.len(q),
                SigmaPacking::Full.len(q),
            )),
            _ => None,
        };
        Self {
            problem: spec.problem,
            parameter_count: spec
                .problem
                .build(Seed::new(spec.seed, 0))
                .as_problem()
                .dim(),
            reps: spec.reps,
            seed: spec.seed,
            generator: GENERATOR.to_string(),
            config: spec.config.clone(),
            accounting: ACCOUNTING_NOTE.to_string(),
            packing_note,
            methods: summarize(records),
        }
    }
}
