//! Location/scale estimation for the multivariate t with known degrees of
//! freedom, via the scale-mixture EM and its parameter-expanded variant.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::ProblemError;
use crate::problem::FixedPointProblem;
use crate::rng::Seed;

/// How `Σ` is laid out in the flat parameter vector after `μ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaPacking {
    /// Lower triangle, row by row: `q(q+1)/2` entries.
    #[default]
    Triangle,
    /// All `q²` entries, column-major; symmetrized on unpack.
    Full,
}

impl SigmaPacking {
    pub fn len(self, q: usize) -> usize {
        match self {
            SigmaPacking::Triangle => q * (q + 1) / 2,
            SigmaPacking::Full => q * q,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MvtParams {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl MvtParams {
    pub fn pack(&self, packing: SigmaPacking) -> DVector<f64> {
        let q = self.mu.len();
        let mut out = Vec::with_capacity(q + packing.len(q));
        out.extend(self.mu.iter());
        match packing {
            SigmaPacking::Triangle => {
                for i in 0..q {
                    for j in 0..=i {
                        out.push(self.sigma[(i, j)]);
                    }
                }
            }
            SigmaPacking::Full => out.extend(self.sigma.iter()),
        }
        DVector::from_vec(out)
    }

    pub fn unpack(v: &DVector<f64>, q: usize, packing: SigmaPacking) -> Result<Self, ProblemError> {
        let expected = q + packing.len(q);
        if v.len() != expected {
            return Err(ProblemError::BadLength {
                expected,
                got: v.len(),
            });
        }
        let mu = DVector::from_iterator(q, v.iter().take(q).copied());
        let mut sigma = DMatrix::zeros(q, q);
        match packing {
            SigmaPacking::Triangle => {
                let mut idx = q;
                for i in 0..q {
                    for j in 0..=i {
                        sigma[(i, j)] = v[idx];
                        sigma[(j, i)] = v[idx];
                        idx += 1;
                    }
                }
            }
            SigmaPacking::Full => {
                let full = DMatrix::from_iterator(q, q, v.iter().skip(q).copied());
                sigma = (&full + full.transpose()) * 0.5;
            }
        }
        Ok(Self { mu, sigma })
    }
}

#[derive(Debug, Clone)]
pub struct MvtData {
    /// `n × q`, one observation per row.
    y: DMatrix<f64>,
    nu: f64,
}

impl MvtData {
    pub fn new(y: DMatrix<f64>, nu: f64) -> Result<Self, ProblemError> {
        if !(nu > 0.0) {
            return Err(ProblemError::InvalidData(
                "degrees of freedom must be positive".into(),
            ));
        }
        if y.nrows() == 0 || y.ncols() == 0 {
            return Err(ProblemError::InvalidData("empty sample".into()));
        }
        Ok(Self { y, nu })
    }

    /// `n` draws from `t_ν(0, VVᵀ)` with `V_ij ~ N(0, 1)`, sampled as
    /// `Vz/√(U/ν)` with `z ~ N(0, I)`, `U ~ χ²_ν`.
    pub fn generate(seed: impl Into<Seed>, n: usize, q: usize, nu: f64) -> Self {
        let mut rng = seed.into().rng();
        let chi = ChiSquared::new(nu).expect("positive degrees of freedom");
        let v = DMatrix::<f64>::from_fn(q, q, |_, _| StandardNormal.sample(&mut rng));
        let mut y = DMatrix::zeros(n, q);
        for i in 0..n {
            let z = DVector::<f64>::from_fn(q, |_, _| StandardNormal.sample(&mut rng));
            let u: f64 = chi.sample(&mut rng);
            let row: DVector<f64> = (&v * z) / (u / nu).sqrt();
            y.set_row(i, &row.transpose());
        }
        Self { y, nu }
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn observations(&self) -> &DMatrix<f64> {
        &self.y
    }

    fn cholesky(sigma: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, ProblemError> {
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::SigmaNotPd);
        }
        sigma.clone().cholesky().ok_or(ProblemError::SigmaNotPd)
    }

    /// Mahalanobis distances `d_i = (y_i − μ)ᵀΣ⁻¹(y_i − μ)`.
    fn distances(&self, params: &MvtParams, chol: &Cholesky<f64, Dyn>) -> Vec<f64> {
        let centered = DMatrix::from_fn(self.q(), self.n(), |j, i| self.y[(i, j)] - params.mu[j]);
        let l = chol.l();
        let z = l
            .solve_lower_triangular(&centered)
            .expect("Cholesky factor is nonsingular");
        z.column_iter().map(|c| c.norm_squared()).collect()
    }

    fn step(&self, params: &MvtParams, expanded: bool) -> Result<MvtParams, ProblemError> {
        let q = self.q();
        let chol = Self::cholesky(&params.sigma)?;
        let d = self.distances(params, &chol);
        let w: Vec<f64> = d
            .iter()
            .map(|di| (self.nu + q as f64) / (self.nu + di))
            .collect();
        let w_sum: f64 = w.iter().sum();
        let mut mu = DVector::zeros(q);
        for (i, wi) in w.iter().enumerate() {
            mu.axpy(*wi, &self.y.row(i).transpose(), 1.0);
        }
        mu /= w_sum;
        let mut sigma = DMatrix::zeros(q, q);
        for (i, wi) in w.iter().enumerate() {
            let r = self.y.row(i).transpose() - &mu;
            sigma.ger(*wi, &r, &r, 1.0);
        }
        sigma /= if expanded { w_sum } else { self.n() as f64 };
        Ok(MvtParams { mu, sigma })
    }

    /// Plain EM: weights `w_i = (ν+q)/(ν+d_i)`, weighted mean, and
    /// `Σ⁺ = n⁻¹ Σ w_i r_i r_iᵀ`.
    pub fn em_map(&self, params: &MvtParams) -> Result<MvtParams, ProblemError> {
        self.step(params, false)
    }

    /// Parameter-expanded EM: as [`em_map`](Self::em_map) but `Σ⁺` is
    /// normalized by `Σ w_i` instead of `n`.
    pub fn px_em_map(&self, params: &MvtParams) -> Result<MvtParams, ProblemError> {
        self.step(params, true)
    }

    pub fn loglik(&self, params: &MvtParams) -> Result<f64, ProblemError> {
        let q = self.q() as f64;
        let nu = self.nu;
        let chol = Self::cholesky(&params.sigma)?;
        let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let c = ln_gamma((nu + q) / 2.0)
            - ln_gamma(nu / 2.0)
            - 0.5 * q * (nu * std::f64::consts::PI).ln()
            - 0.5 * log_det;
        let d = self.distances(params, &chol);
        Ok(d.iter()
            .map(|di| c - 0.5 * (nu + q) * (di / nu).ln_1p())
            .sum())
    }

    /// Sample mean and sample covariance plus `10⁻³·I`.
    pub fn default_start(&self) -> MvtParams {
        let n = self.n() as f64;
        let q = self.q();
        let mu = DVector::from_fn(q, |j, _| self.y.column(j).sum() / n);
        let mut sigma = DMatrix::identity(q, q) * 1e-3;
        for i in 0..self.n() {
            let r = self.y.row(i).transpose() - &mu;
            sigma.ger(1.0 / (n - 1.0).max(1.0), &r, &r, 1.0);
        }
        MvtParams { mu, sigma }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MvtAlgorithm {
    #[default]
    Em,
    PxEm,
}

/// Fixed-point problem over the packed `(μ, Σ)` vector.
///
/// Points whose `Σ` has no Cholesky factor are infeasible; the map returns
/// NaNs there.
#[derive(Debug, Clone)]
pub struct MvtProblem {
    pub data: MvtData,
    pub packing: SigmaPacking,
    pub algorithm: MvtAlgorithm,
}

impl MvtProblem {
    pub fn new(data: MvtData, packing: SigmaPacking, algorithm: MvtAlgorithm) -> Self {
        Self {
            data,
            packing,
            algorithm,
        }
    }

    pub fn unpack(&self, x: &DVector<f64>) -> Result<MvtParams, ProblemError> {
        MvtParams::unpack(x, self.data.q(), self.packing)
    }

    pub fn pack(&self, params: &MvtParams) -> DVector<f64> {
        params.pack(self.packing)
    }

    pub fn default_start(&self) -> DVector<f64> {
        self.pack(&self.data.default_start())
    }
}

impl FixedPointProblem for MvtProblem {
    fn dim(&self) -> usize {
        let q = self.data.q();
        q + self.packing.len(q)
    }

    fn map(&self, x: &DVector<f64>) -> DVector<f64> {
        let next = self.unpack(x).and_then(|p| match self.algorithm {
            MvtAlgorithm::Em => self.data.em_map(&p),
            MvtAlgorithm::PxEm => self.data.px_em_map(&p),
        });
        match next {
            Ok(p) => self.pack(&p),
            Err(_) => DVector::from_element(self.dim(), f64::NAN),
        }
    }

    fn has_merit(&self) -> bool {
        true
    }

    fn merit(&self, x: &DVector<f64>) -> f64 {
        self.unpack(x)
            .and_then(|p| self.data.loglik(&p))
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn is_feasible(&self, x: &DVector<f64>) -> bool {
        self.unpack(x)
            .and_then(|p| MvtData::cholesky(&p.sigma).map(|_| ()))
            .is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cauchy_mode_density() {
        let data = MvtData::new(DMatrix::from_element(1, 1, 0.0), 1.0).unwrap();
        let params = MvtParams {
            mu: DVector::zeros(1),
            sigma: DMatrix::identity(1, 1),
        };
        assert_relative_eq!(
            data.loglik(&params).unwrap(),
            (1.0 / std::f64::consts::PI).ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn observations_at_location() {
        let q = 3;
        let mu = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let y = DMatrix::from_fn(4, q, |_, j| mu[j]);
        let data = MvtData::new(y, 2.0).unwrap();
        let params = MvtParams {
            mu: mu.clone(),
            sigma: DMatrix::identity(q, q),
        };
        let next = data.em_map(&params).unwrap();
        assert_relative_eq!(next.mu, mu, epsilon = 1e-14);
        // d_i = 0 so every weight is (ν+q)/ν and every residual vanishes
        assert_relative_eq!(next.sigma, DMatrix::zeros(q, q), epsilon = 1e-14);
    }

    #[test]
    fn scalar_case_by_hand() {
        let ys = [-1.0, 0.0, 0.5, 2.0, 4.0];
        let (nu, mu0, s0) = (3.0, 0.5, 2.0);
        let data = MvtData::new(DMatrix::from_column_slice(5, 1, &ys), nu).unwrap();
        let params = MvtParams {
            mu: DVector::from_element(1, mu0),
            sigma: DMatrix::from_element(1, 1, s0),
        };
        let w: Vec<f64> = ys
            .iter()
            .map(|y| (nu + 1.0) / (nu + (y - mu0) * (y - mu0) / s0))
            .collect();
        let sw: f64 = w.iter().sum();
        let mu1 = ys.iter().zip(&w).map(|(y, w)| w * y).sum::<f64>() / sw;
        let ss: f64 = ys.iter().zip(&w).map(|(y, w)| w * (y - mu1).powi(2)).sum();

        let em = data.em_map(&params).unwrap();
        assert_relative_eq!(em.mu[0], mu1, epsilon = 1e-14);
        assert_relative_eq!(em.sigma[(0, 0)], ss / 5.0, epsilon = 1e-14);
        let px = data.px_em_map(&params).unwrap();
        assert_relative_eq!(px.sigma[(0, 0)], ss / sw, epsilon = 1e-14);
    }

    #[test]
    fn packing_round_trips() {
        let params = MvtParams {
            mu: DVector::from_vec(vec![1.0, 2.0]),
            sigma: DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
        };
        for packing in [SigmaPacking::Triangle, SigmaPacking::Full] {
            let v = params.pack(packing);
            assert_eq!(v.len(), 2 + packing.len(2));
            assert_eq!(MvtParams::unpack(&v, 2, packing).unwrap(), params);
        }
        assert_eq!(SigmaPacking::Triangle.len(25) + 25, 350);
        assert_eq!(SigmaPacking::Full.len(25) + 25, 650);
        assert_eq!(SigmaPacking::Full.len(10) + 10, 110);
    }

    #[test]
    fn non_pd_sigma_is_infeasible() {
        let data = MvtData::generate(1, 20, 2, 1.0);
        let prob = MvtProblem::new(data, SigmaPacking::Triangle, MvtAlgorithm::Em);
        let bad = MvtParams {
            mu: DVector::zeros(2),
            sigma: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]),
        };
        let x = prob.pack(&bad);
        assert!(!prob.is_feasible(&x));
        assert!(prob.map(&x).iter().all(|v| v.is_nan()));
        assert_eq!(prob.data.em_map(&bad), Err(ProblemError::SigmaNotPd));
    }

    #[test]
    fn generated_start_is_pd() {
        let data = MvtData::generate(Seed::new(3, 1), 100, 5, 1.0);
        assert!(data.default_start().sigma.cholesky().is_some());
    }
}
