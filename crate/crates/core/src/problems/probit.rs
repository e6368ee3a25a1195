//! Probit regression fitted by EM on the latent-normal representation
//! `Z = xᵀβ + ε`, `Y = 1{Z > 0}`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal, StudentT};

use super::normal::{inverse_mills, log_cdf};
use crate::error::ProblemError;
use crate::problem::FixedPointProblem;
use crate::rng::Seed;

#[derive(Debug, Clone)]
pub struct ProbitData {
    x: DMatrix<f64>,
    y: Vec<bool>,
    /// `(XᵀX)⁻¹Xᵀ`
    projector: DMatrix<f64>,
    beta_true: Option<DVector<f64>>,
}

impl ProbitData {
    /// Sample size of the full-scale simulation study.
    pub const STUDY_N: usize = 2000;
    /// Regressor counts of the full-scale simulation study.
    pub const STUDY_P: [usize; 2] = [10, 25];

    pub fn new(x: DMatrix<f64>, y: Vec<bool>) -> Result<Self, ProblemError> {
        if x.nrows() != y.len() {
            return Err(ProblemError::InvalidData(format!(
                "{} design rows but {} responses",
                x.nrows(),
                y.len()
            )));
        }
        let gram = x.tr_mul(&x);
        let chol = gram.cholesky().ok_or_else(|| {
            ProblemError::InvalidData("design matrix does not have full column rank".into())
        })?;
        let projector = chol.solve(&x.transpose());
        Ok(Self {
            x,
            y,
            projector,
            beta_true: None,
        })
    }

    /// Simulation design: `x_ij ~ N(0, 1)`, `β_j = T_j/2 + 2` with
    /// `T_j ~ t₂`, and `Y_i = 1{x_iᵀβ + ε_i > 0}`.
    pub fn generate(seed: impl Into<Seed>, n: usize, p: usize) -> Self {
        let mut rng = seed.into().rng();
        let t2 = StudentT::new(2.0).expect("valid degrees of freedom");
        let beta = DVector::from_fn(p, |_, _| t2.sample(&mut rng) / 2.0 + 2.0);
        let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let eta = &x * &beta;
        let y = eta
            .iter()
            .map(|&e| {
                let eps: f64 = StandardNormal.sample(&mut rng);
                e + eps > 0.0
            })
            .collect();
        let mut data = Self::new(x, y).expect("Gaussian design with n >= p has full rank");
        data.beta_true = Some(beta);
        data
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn response(&self) -> &[bool] {
        &self.y
    }

    pub fn beta_true(&self) -> Option<&DVector<f64>> {
        self.beta_true.as_ref()
    }

    /// Attach the coefficients the data were simulated from.
    pub fn with_beta_true(mut self, beta: DVector<f64>) -> Self {
        self.beta_true = Some(beta);
        self
    }

    /// One EM step: conditional means of the latents, then least squares.
    pub fn em_map(&self, beta: &DVector<f64>) -> DVector<f64> {
        let mut u = &self.x * beta;
        for (ui, &yi) in u.iter_mut().zip(&self.y) {
            let eta = *ui;
            *ui = if yi {
                eta + inverse_mills(-eta)
            } else {
                eta - inverse_mills(eta)
            };
        }
        &self.projector * u
    }

    /// `Σ y log Φ(xᵀβ) + (1 − y) log Φ(−xᵀβ)`.
    pub fn loglik(&self, beta: &DVector<f64>) -> f64 {
        let eta = &self.x * beta;
        eta.iter()
            .zip(&self.y)
            .map(|(&e, &yi)| if yi { log_cdf(e) } else { log_cdf(-e) })
            .sum()
    }
}

/// [`ProbitData`] as a fixed-point problem with the log-likelihood as merit.
#[derive(Debug, Clone)]
pub struct ProbitProblem {
    pub data: ProbitData,
}

impl ProbitProblem {
    pub fn new(data: ProbitData) -> Self {
        Self { data }
    }

    pub fn default_start(&self) -> DVector<f64> {
        DVector::zeros(self.data.p())
    }
}

impl FixedPointProblem for ProbitProblem {
    fn dim(&self) -> usize {
        self.data.p()
    }

    fn map(&self, x: &DVector<f64>) -> DVector<f64> {
        self.data.em_map(x)
    }

    fn has_merit(&self) -> bool {
        true
    }

    fn merit(&self, x: &DVector<f64>) -> f64 {
        self.data.loglik(x)
    }
}
