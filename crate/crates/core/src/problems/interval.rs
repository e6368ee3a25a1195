//! Nonparametric MLE of a distribution function from interval-censored
//! observations (self-consistency EM).
//!
//! Observation `i` says the event happened in `(L_i, R_i)`. With the support
//! grid `s_0 < s_1 < … < s_p` built from all endpoints, the likelihood
//! depends only on the masses `θ_j` of the cells `(s_{j−1}, s_j)`, and cell
//! `j` is compatible with observation `i` when `s_{j−1} ≥ L_i` and
//! `s_j ≤ R_i`.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Poisson, Weibull};
use serde::{Deserialize, Serialize};

use crate::error::ProblemError;
use crate::problem::FixedPointProblem;
use crate::rng::Seed;

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCensorData {
    /// Column indices `j` with `a_ij = 1`, per observation.
    rows: Vec<Vec<usize>>,
    /// `s_0 < … < s_p`; the last entry may be `+∞`.
    endpoints: Vec<f64>,
    intervals: Option<Vec<(f64, f64)>>,
}

impl IntervalCensorData {
    /// Build the support grid and incidence structure from observed
    /// intervals. Exact ties among endpoints collapse to one grid point.
    pub fn from_intervals(intervals: Vec<(f64, f64)>) -> Result<Self, ProblemError> {
        if intervals.is_empty() {
            return Err(ProblemError::InvalidData("no observations".into()));
        }
        for (i, &(l, r)) in intervals.iter().enumerate() {
            if !(l >= 0.0 && l < r) || l.is_nan() || r.is_nan() {
                return Err(ProblemError::InvalidData(format!(
                    "observation {i} has invalid interval ({l}, {r})"
                )));
            }
        }
        let mut grid: Vec<f64> = std::iter::once(0.0)
            .chain(intervals.iter().flat_map(|&(l, r)| [l, r]))
            .collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();

        let rows = intervals
            .iter()
            .map(|&(l, r)| {
                (1..grid.len())
                    .filter(|&j| grid[j - 1] >= l && grid[j] <= r)
                    .map(|j| j - 1)
                    .collect()
            })
            .collect();
        Ok(Self {
            rows,
            endpoints: grid,
            intervals: Some(intervals),
        })
    }

    /// Build directly from a dense 0/1 incidence matrix, given row by row.
    /// Without interval data the grid is the cell index `0, 1, …, p`.
    pub fn from_incidence(a: &[Vec<u8>]) -> Result<Self, ProblemError> {
        let p = a.first().map_or(0, Vec::len);
        if p == 0 {
            return Err(ProblemError::InvalidData("empty incidence matrix".into()));
        }
        let mut rows = Vec::with_capacity(a.len());
        for (i, row) in a.iter().enumerate() {
            if row.len() != p {
                return Err(ProblemError::InvalidData(format!(
                    "row {i} has length {}",
                    row.len()
                )));
            }
            let cols: Vec<usize> = row
                .iter()
                .enumerate()
                .filter_map(|(j, &v)| (v != 0).then_some(j))
                .collect();
            if cols.is_empty() {
                return Err(ProblemError::InvalidData(format!(
                    "row {i} has no compatible cell"
                )));
            }
            rows.push(cols);
        }
        Ok(Self {
            rows,
            endpoints: (0..=p).map(|j| j as f64).collect(),
            intervals: None,
        })
    }

    /// Simulation design: `X ~ Weibull(shape 3, scale 5)`, `n_i ~ Poisson(5)`
    /// inspection times `E = ⌊Ẽ⌋/50` with `Ẽ ~ U(0, 500)`; `L` is the last
    /// inspection before `X` (or 0) and `R` the first after it (or `∞`).
    pub fn generate(seed: impl Into<Seed>, n: usize) -> Self {
        let mut rng = seed.into().rng();
        let weibull = Weibull::new(5.0, 3.0).expect("valid Weibull parameters");
        let poisson = Poisson::new(5.0).expect("valid Poisson mean");
        let intervals = (0..n)
            .map(|_| {
                let x: f64 = weibull.sample(&mut rng);
                let count = poisson.sample(&mut rng) as usize;
                let mut left = 0.0f64;
                let mut right = f64::INFINITY;
                for _ in 0..count {
                    let e = rng.random_range(0.0..500.0f64).floor() / 50.0;
                    if e < x {
                        left = left.max(e);
                    } else if e > x {
                        right = right.min(e);
                    }
                }
                (left, right)
            })
            .collect();
        Self::from_intervals(intervals).expect("generated intervals are valid")
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Number of cells (parameters).
    pub fn p(&self) -> usize {
        self.endpoints.len() - 1
    }

    pub fn endpoints(&self) -> &[f64] {
        &self.endpoints
    }

    pub fn intervals(&self) -> Option<&[(f64, f64)]> {
        self.intervals.as_deref()
    }

    pub fn incidence_rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// Dense 0/1 incidence matrix, row by row.
    pub fn incidence(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|cols| {
                let mut row = vec![0u8; self.p()];
                for &j in cols {
                    row[j] = 1;
                }
                row
            })
            .collect()
    }

    fn row_mass(&self, i: usize, theta: &DVector<f64>) -> f64 {
        self.rows[i].iter().map(|&j| theta[j]).sum()
    }

    /// `θ_j⁺ = n⁻¹ Σ_i a_ij θ_j / Σ_h a_ih θ_h`, renormalized onto the simplex.
    pub fn em_map(&self, theta: &DVector<f64>) -> Result<DVector<f64>, ProblemError> {
        if theta.len() != self.p() {
            return Err(ProblemError::BadLength {
                expected: self.p(),
                got: theta.len(),
            });
        }
        let mut acc = DVector::zeros(self.p());
        for (i, cols) in self.rows.iter().enumerate() {
            let mass = self.row_mass(i, theta);
            if !(mass > 0.0) {
                return Err(ProblemError::ZeroRowMass { row: i });
            }
            for &j in cols {
                acc[j] += theta[j] / mass;
            }
        }
        acc /= self.n() as f64;
        let total = acc.sum();
        // Masses decaying towards zero would otherwise go subnormal.
        Ok(acc.map(|v| {
            let v = v / total;
            if v.abs() < f64::MIN_POSITIVE {
                0.0
            } else {
                v
            }
        }))
    }

    /// `Σ_i log Σ_j a_ij θ_j`; `−∞` when some observation has no mass.
    pub fn loglik(&self, theta: &DVector<f64>) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n() {
            let mass = self.row_mass(i, theta);
            if !(mass > 0.0) {
                return f64::NEG_INFINITY;
            }
            total += mass.ln();
        }
        total
    }

    pub fn uniform_start(&self) -> DVector<f64> {
        DVector::from_element(self.p(), 1.0 / self.p() as f64)
    }
}

/// Which extrapolated mass vectors the solvers may accept.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IcFeasibility {
    /// Every mass nonnegative and every observation with positive mass.
    #[default]
    NonNegative,
    /// Only require positive mass per observation, i.e. a finite
    /// log-likelihood; individual masses may go negative.
    PositiveMass,
}

#[derive(Debug, Clone)]
pub struct IcProblem {
    pub data: IntervalCensorData,
    pub feasibility: IcFeasibility,
}

impl IcProblem {
    pub fn new(data: IntervalCensorData) -> Self {
        Self {
            data,
            feasibility: IcFeasibility::default(),
        }
    }

    pub fn with_feasibility(mut self, feasibility: IcFeasibility) -> Self {
        self.feasibility = feasibility;
        self
    }

    pub fn default_start(&self) -> DVector<f64> {
        self.data.uniform_start()
    }
}

impl FixedPointProblem for IcProblem {
    fn dim(&self) -> usize {
        self.data.p()
    }

    fn map(&self, x: &DVector<f64>) -> DVector<f64> {
        self.data
            .em_map(x)
            .unwrap_or_else(|_| DVector::from_element(self.dim(), f64::NAN))
    }

    fn has_merit(&self) -> bool {
        true
    }

    fn merit(&self, x: &DVector<f64>) -> f64 {
        self.data.loglik(x)
    }

    fn is_feasible(&self, x: &DVector<f64>) -> bool {
        let signs_ok = match self.feasibility {
            IcFeasibility::NonNegative => x.iter().all(|&v| v >= 0.0),
            IcFeasibility::PositiveMass => true,
        };
        signs_ok
            && x.iter().all(|v| v.is_finite())
            && (0..self.data.n()).all(|i| self.data.row_mass(i, x) > 0.0)
    }
}
