//! Plain-text dataset dumps, readable from any environment.
//!
//! ```text
//! # kind=probit
//! # generator=chacha8-v1
//! # seed=42
//! # stream=3
//! # n=500
//! # p=10
//! # columns=y x1 x2 … x10
//! 1 0.318 -1.2 …
//! ```
//!
//! Header lines are `# key=value`; the body holds one whitespace-separated
//! row per observation. Probit rows are `y x_1 … x_p` with `y ∈ {0, 1}`,
//! multivariate-t rows are `y_1 … y_q` with `nu` in the header, and
//! interval-censored rows are `L R a_1 … a_p` (or only the incidence
//! entries when the intervals are unknown) with the grid in `endpoints`.
//! Numbers use the shortest representation that parses back exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use nalgebra::{DMatrix, DVector};

use super::interval::IntervalCensorData;
use super::mvt::MvtData;
use super::probit::ProbitData;
use crate::error::ProblemError;
use crate::rng::{Seed, GENERATOR};

#[derive(Debug, Clone)]
pub enum Dataset {
    Probit(ProbitData),
    Mvt(MvtData),
    Ic(IntervalCensorData),
}

/// Provenance carried in the header.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetHeader {
    pub seed: Option<Seed>,
    pub generator: Option<String>,
}

impl DatasetHeader {
    pub fn seeded(seed: Seed) -> Self {
        Self {
            seed: Some(seed),
            generator: Some(GENERATOR.to_string()),
        }
    }
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    let mut out = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v}").expect("writing to a String");
    }
    out
}

fn names(prefix: &str, count: usize) -> String {
    (1..=count)
        .map(|j| format!("{prefix}{j}"))
        .collect::<Vec<_>>()
        .join(" ")
}

impl Dataset {
    pub fn kind(&self) -> &'static str {
        match self {
            Dataset::Probit(_) => "probit",
            Dataset::Mvt(_) => "mvt",
            Dataset::Ic(_) => "ic",
        }
    }

    pub fn write<W: Write>(&self, header: &DatasetHeader, mut out: W) -> io::Result<()> {
        writeln!(out, "# kind={}", self.kind())?;
        if let Some(g) = &header.generator {
            writeln!(out, "# generator={g}")?;
        }
        if let Some(seed) = header.seed {
            writeln!(out, "# seed={}", seed.key)?;
            writeln!(out, "# stream={}", seed.stream)?;
        }
        match self {
            Dataset::Probit(d) => {
                writeln!(out, "# n={}", d.n())?;
                writeln!(out, "# p={}", d.p())?;
                if let Some(beta) = d.beta_true() {
                    writeln!(out, "# beta_true={}", join(beta.iter().copied()))?;
                }
                writeln!(out, "# columns=y {}", names("x", d.p()))?;
                for (i, &y) in d.response().iter().enumerate() {
                    let row = d.design().row(i);
                    writeln!(out, "{} {}", u8::from(y), join(row.iter().copied()))?;
                }
            }
            Dataset::Mvt(d) => {
                writeln!(out, "# n={}", d.n())?;
                writeln!(out, "# q={}", d.q())?;
                writeln!(out, "# nu={}", d.nu())?;
                writeln!(out, "# columns={}", names("y", d.q()))?;
                for row in d.observations().row_iter() {
                    writeln!(out, "{}", join(row.iter().copied()))?;
                }
            }
            Dataset::Ic(d) => {
                writeln!(out, "# n={}", d.n())?;
                writeln!(out, "# p={}", d.p())?;
                writeln!(out, "# endpoints={}", join(d.endpoints().iter().copied()))?;
                let a_names = names("a", d.p());
                match d.intervals() {
                    Some(_) => writeln!(out, "# columns=L R {a_names}")?,
                    None => writeln!(out, "# columns={a_names}")?,
                }
                for (i, row) in d.incidence().iter().enumerate() {
                    let a = row.iter().map(u8::to_string).collect::<Vec<_>>().join(" ");
                    match d.intervals() {
                        Some(iv) => writeln!(out, "{} {} {a}", iv[i].0, iv[i].1)?,
                        None => writeln!(out, "{a}")?,
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<(Self, DatasetHeader), ProblemError> {
        let mut fields = BTreeMap::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| ProblemError::InvalidData(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    fields.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            let row = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ProblemError::InvalidData(format!("line {}: {e}", lineno + 1)))?;
            rows.push(row);
        }

        let get = |key: &str| {
            fields
                .get(key)
                .ok_or_else(|| ProblemError::InvalidData(format!("missing header field `{key}`")))
        };
        let count = |key: &str| -> Result<usize, ProblemError> {
            get(key)?
                .parse()
                .map_err(|e| ProblemError::InvalidData(format!("header `{key}`: {e}")))
        };
        let floats = |key: &str| -> Result<Vec<f64>, ProblemError> {
            get(key)?
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<Result<_, _>>()
                .map_err(|e| ProblemError::InvalidData(format!("header `{key}`: {e}")))
        };
        let check_shape = |n: usize, width: usize| {
            if rows.len() != n {
                return Err(ProblemError::InvalidData(format!(
                    "expected {n} rows, found {}",
                    rows.len()
                )));
            }
            match rows.iter().position(|r| r.len() != width) {
                Some(i) => Err(ProblemError::InvalidData(format!(
                    "row {} does not have {width} columns",
                    i + 1
                ))),
                None => Ok(()),
            }
        };

        let header = DatasetHeader {
            seed: match (fields.get("seed"), fields.get("stream")) {
                (Some(k), s) => {
                    let parse = |v: &String| {
                        v.parse::<u64>()
                            .map_err(|e| ProblemError::InvalidData(format!("seed: {e}")))
                    };
                    Some(Seed::new(parse(k)?, s.map(parse).transpose()?.unwrap_or(0)))
                }
                (None, _) => None,
            },
            generator: fields.get("generator").cloned(),
        };

        let dataset = match get("kind")?.as_str() {
            "probit" => {
                let (n, p) = (count("n")?, count("p")?);
                check_shape(n, p + 1)?;
                let y = rows
                    .iter()
                    .map(|r| match r[0] {
                        1.0 => Ok(true),
                        0.0 => Ok(false),
                        v => Err(ProblemError::InvalidData(format!(
                            "response {v} is not 0 or 1"
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let x = DMatrix::from_fn(n, p, |i, j| rows[i][j + 1]);
                let mut data = ProbitData::new(x, y)?;
                if fields.contains_key("beta_true") {
                    data = data.with_beta_true(DVector::from_vec(floats("beta_true")?));
                }
                Dataset::Probit(data)
            }
            "mvt" => {
                let (n, q) = (count("n")?, count("q")?);
                let nu: f64 = get("nu")?
                    .parse()
                    .map_err(|e| ProblemError::InvalidData(format!("header `nu`: {e}")))?;
                check_shape(n, q)?;
                Dataset::Mvt(MvtData::new(DMatrix::from_fn(n, q, |i, j| rows[i][j]), nu)?)
            }
            "ic" => {
                let (n, p) = (count("n")?, count("p")?);
                let with_intervals = get("columns")?.starts_with("L R");
                check_shape(n, p + if with_intervals { 2 } else { 0 })?;
                if with_intervals {
                    let data = IntervalCensorData::from_intervals(
                        rows.iter().map(|r| (r[0], r[1])).collect(),
                    )?;
                    if data.endpoints() != floats("endpoints")?.as_slice() {
                        return Err(ProblemError::InvalidData(
                            "endpoints do not match the intervals".into(),
                        ));
                    }
                    Dataset::Ic(data)
                } else {
                    let a: Vec<Vec<u8>> = rows
                        .iter()
                        .map(|r| r.iter().map(|&v| u8::from(v != 0.0)).collect())
                        .collect();
                    Dataset::Ic(IntervalCensorData::from_incidence(&a)?)
                }
            }
            other => {
                return Err(ProblemError::InvalidData(format!(
                    "unknown dataset kind `{other}`"
                )))
            }
        };
        Ok((dataset, header))
    }
}
