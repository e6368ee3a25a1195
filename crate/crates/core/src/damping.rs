//! Ridge-damped extrapolation coefficients.
//!
//! The coefficients solve `(FᵀF + λI)γ = Fᵀf`. Instead of choosing `λ`
//! directly, the damping level is expressed relative to the undamped
//! least-squares solution `β_LS`: we look for the `λ` with
//! `‖γ(λ)‖₂ = √δ·‖β_LS‖₂`. Everything is computed from a thin SVD of `F`, so
//! one factorization serves both the root solve and the final coefficients.

use nalgebra::{DMatrix, DVector};

use crate::error::DampingError;

/// Singular values at or below `ZERO_SV_RTOL * d_max` are treated as exact
/// zeros. Shared with the undamped least-squares path in the engine.
pub const ZERO_SV_RTOL: f64 = 1e-12;

/// Iteration cap for [`find_lambda`].
pub const MAX_NEWTON_STEPS: usize = 50;

/// Thin SVD `F = U·diag(d)·Vᵀ` with the projections `Uᵀf` cached.
///
/// Only the numerically nonzero singular triplets are kept, sorted by
/// descending singular value. `rank()` may therefore be smaller than the
/// column count of `F`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    u: DMatrix<f64>,
    d: DVector<f64>,
    v: DMatrix<f64>,
    uf: DVector<f64>,
    ncols: usize,
}

impl SvdFactors {
    /// Factor `f_hist` and project the residual `f` onto its left singular
    /// vectors.
    pub fn new(f_hist: &DMatrix<f64>, f: &DVector<f64>) -> Self {
        let ncols = f_hist.ncols();
        let (nrows, _) = f_hist.shape();
        assert_eq!(nrows, f.len(), "residual length must match history rows");
        if ncols == 0 || nrows == 0 {
            return Self::empty(nrows, ncols);
        }
        let svd = f_hist.clone().svd(true, true);
        let u_full = svd.u.expect("left singular vectors requested");
        let vt_full = svd.v_t.expect("right singular vectors requested");

        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let d_max = order
            .first()
            .map(|&i| svd.singular_values[i])
            .unwrap_or(0.0);
        let keep: Vec<usize> = order
            .into_iter()
            .filter(|&i| {
                let d = svd.singular_values[i];
                d_max > 0.0 && d.is_finite() && d > ZERO_SV_RTOL * d_max
            })
            .collect();

        let r = keep.len();
        let mut u = DMatrix::zeros(nrows, r);
        let mut v = DMatrix::zeros(ncols, r);
        let mut d = DVector::zeros(r);
        for (j, &i) in keep.iter().enumerate() {
            u.set_column(j, &u_full.column(i));
            v.set_column(j, &vt_full.row(i).transpose());
            d[j] = svd.singular_values[i];
        }
        let uf = u.tr_mul(f);
        Self { u, d, v, uf, ncols }
    }

    /// Build factors from explicit parts. `d` must be positive and sorted
    /// descending; `uf` is `Uᵀf`. Intended for closed-form checks.
    pub fn from_parts(u: DMatrix<f64>, d: DVector<f64>, v: DMatrix<f64>, uf: DVector<f64>) -> Self {
        assert_eq!(u.ncols(), d.len());
        assert_eq!(v.ncols(), d.len());
        assert_eq!(uf.len(), d.len());
        let ncols = v.nrows();
        Self { u, d, v, uf, ncols }
    }

    fn empty(nrows: usize, ncols: usize) -> Self {
        Self {
            u: DMatrix::zeros(nrows, 0),
            d: DVector::zeros(0),
            v: DMatrix::zeros(ncols, 0),
            uf: DVector::zeros(0),
            ncols,
        }
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Cached `Uᵀf`.
    pub fn uf(&self) -> &DVector<f64> {
        &self.uf
    }

    /// Number of retained (nonzero) singular values.
    pub fn rank(&self) -> usize {
        self.d.len()
    }

    /// Column count of the factored history matrix, i.e. the length of γ.
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// `‖β_LS‖₂` for the minimum-norm least-squares solution.
    pub fn beta_ls_norm(&self) -> f64 {
        self.d
            .iter()
            .zip(self.uf.iter())
            .map(|(d, uf)| (uf / d).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `‖Fᵀf‖₂`.
    pub fn ft_f_norm(&self) -> f64 {
        self.d
            .iter()
            .zip(self.uf.iter())
            .map(|(d, uf)| (d * uf).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `‖s(λ)‖₂` where `s(λ) = (FᵀF + λI)⁻¹Fᵀf`.
    pub fn ridge_norm(&self, lambda: f64) -> f64 {
        self.d
            .iter()
            .zip(self.uf.iter())
            .map(|(d, uf)| (d * uf / (d * d + lambda)).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Damped coefficients `γ = V·diag(d/(d²+λ))·Uᵀf`.
///
/// At `λ = 0` this is the minimum-norm least-squares solution of
/// `min ‖f − Fγ‖₂`.
pub fn ridge_gamma(svd: &SvdFactors, lambda: f64) -> DVector<f64> {
    debug_assert!(lambda >= 0.0);
    let scaled = DVector::from_iterator(
        svd.rank(),
        svd.d
            .iter()
            .zip(svd.uf.iter())
            .map(|(d, uf)| d * uf / (d * d + lambda)),
    );
    if svd.rank() == 0 {
        return DVector::zeros(svd.ncols);
    }
    &svd.v * scaled
}

/// `h(λ) = δ‖β_LS‖² − ‖s(λ)‖²`, increasing in λ with a unique positive root.
pub fn h_of_lambda(svd: &SvdFactors, delta: f64, lambda: f64) -> Result<f64, DampingError> {
    if svd.rank() == 0 {
        return Err(DampingError::AllSingularValuesZero);
    }
    Ok(delta * svd.beta_ls_norm().powi(2) - svd.ridge_norm(lambda).powi(2))
}

/// Value and derivative of `φ(λ) = ‖s(λ)‖₂ − v_target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiEval {
    pub phi: f64,
    pub dphi: f64,
    pub s_norm: f64,
}

pub fn phi_and_derivative(
    svd: &SvdFactors,
    v_target: f64,
    lambda: f64,
) -> Result<PhiEval, DampingError> {
    let s_norm = svd.ridge_norm(lambda);
    if s_norm == 0.0 {
        return Err(DampingError::ZeroResidualProjection);
    }
    let sum: f64 = svd
        .d
        .iter()
        .zip(svd.uf.iter())
        .map(|(d, uf)| (d * uf).powi(2) / (d * d + lambda).powi(3))
        .sum();
    Ok(PhiEval {
        phi: s_norm - v_target,
        dphi: -sum / s_norm,
        s_norm,
    })
}

/// Relative damping `δ = 1/(1 + α^(κ−s))`.
pub fn compute_delta(s: i64, alpha: f64, kappa: f64) -> f64 {
    1.0 / (1.0 + alpha.powf(kappa - s as f64))
}

/// Acceptance band `[l_stop, u_stop]` for `‖s(λ)‖/‖β_LS‖`: the logit-scale
/// midpoints between the neighbouring damping levels `s−1`, `s`, `s+1`.
pub fn stopping_band(s: i64, alpha: f64, kappa: f64) -> (f64, f64) {
    let e = kappa - s as f64;
    let l = (1.0 + alpha.powf(e + 0.5)).powf(-0.5);
    let u = (1.0 + alpha.powf(e - 0.5)).powf(-0.5);
    (l, u)
}

/// Warm start carried between root solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmStart {
    pub lambda: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingSolution {
    pub lambda: f64,
    /// `‖s(λ)‖·φ(λ)/φ'(λ)`, fed back as the next warm start.
    pub r: f64,
    pub n_newton_steps: usize,
    /// True when the step cap was hit and `λ` is the bracket midpoint.
    pub capped: bool,
}

impl DampingSolution {
    pub fn warm_start(&self) -> WarmStart {
        WarmStart {
            lambda: self.lambda,
            r: self.r,
        }
    }
}

/// Safeguarded Newton iteration for `‖s(λ)‖ = √δ·‖β_LS‖`.
///
/// Keeps a bracket `[L, U]` around the root, jumps back inside it with
/// `max(0.001·U, √(L·U))` whenever the iterate leaves it, and stops as soon
/// as the ratio `‖s(λ)‖/‖β_LS‖` lands in [`stopping_band`]. Without a warm
/// start the first trial is the geometric midpoint of the initial bracket.
pub fn find_lambda(
    svd: &SvdFactors,
    warm: Option<WarmStart>,
    s: i64,
    alpha: f64,
    kappa: f64,
) -> Result<DampingSolution, DampingError> {
    if svd.rank() == 0 {
        return Err(DampingError::AllSingularValuesZero);
    }
    let beta_norm = svd.beta_ls_norm();
    if !(beta_norm > 0.0) || !beta_norm.is_finite() {
        return Err(DampingError::ZeroResidualProjection);
    }
    let (l_stop, u_stop) = stopping_band(s, alpha, kappa);
    if u_stop >= 1.0 {
        return Ok(DampingSolution {
            lambda: 0.0,
            r: 0.0,
            n_newton_steps: 0,
            capped: false,
        });
    }
    let delta = compute_delta(s, alpha, kappa);
    let v_target = delta.sqrt() * beta_norm;
    let lo_norm = l_stop * beta_norm;
    let hi_norm = u_stop * beta_norm;

    let at_zero = phi_and_derivative(svd, v_target, 0.0)?;
    let mut lower = -at_zero.phi / at_zero.dphi;
    let mut upper = svd.ft_f_norm() / v_target;
    let mut lambda = match warm {
        Some(w) => w.lambda - w.r / v_target,
        None => (lower * upper).sqrt(),
    };

    for t in 1..=MAX_NEWTON_STEPS {
        if !(lambda > lower && lambda < upper) {
            lambda = (0.001 * upper).max((lower * upper).sqrt());
        }
        let eval = phi_and_derivative(svd, v_target, lambda)?;
        let ratio_r = eval.s_norm * eval.phi / eval.dphi;
        if eval.s_norm >= lo_norm && eval.s_norm <= hi_norm {
            return Ok(DampingSolution {
                lambda,
                r: ratio_r,
                n_newton_steps: t,
                capped: false,
            });
        }
        if eval.phi < 0.0 {
            upper = lambda;
        }
        lower = lower.max(lambda - eval.phi / eval.dphi);
        if lower > upper {
            lower = upper;
        }
        lambda -= (eval.s_norm / v_target) * (eval.phi / eval.dphi);
    }

    let lambda = (lower * upper).sqrt();
    let eval = phi_and_derivative(svd, v_target, lambda)?;
    Ok(DampingSolution {
        lambda,
        r: eval.s_norm * eval.phi / eval.dphi,
        n_newton_steps: MAX_NEWTON_STEPS,
        capped: true,
    })
}
