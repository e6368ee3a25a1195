//! Independent oracles shared by the integration tests. Nothing here goes
//! through the crate's SVD or solver code paths.
#![allow(dead_code)]

use daarem::FnProblem;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Solve `a·x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)]).chain([b[i]]).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let (top, rest) = m.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for row in rest.iter_mut() {
            let factor = row[col] / pivot_row[col];
            for (r, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *r -= factor * p;
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - tail) / m[i][i];
    }
    DVector::from_vec(x)
}

/// `(FᵀF + λI)⁻¹Fᵀf` from the normal equations.
pub fn normal_equations(f_hist: &DMatrix<f64>, f: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let m = f_hist.ncols();
    let mut gram = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for i in 0..m {
        rhs[i] = (0..f.len()).map(|r| f_hist[(r, i)] * f[r]).sum();
        for j in 0..m {
            gram[(i, j)] = (0..f.len()).map(|r| f_hist[(r, i)] * f_hist[(r, j)]).sum();
        }
        gram[(i, i)] += lambda;
    }
    gauss_solve(&gram, &rhs)
}

/// Ratio of largest to smallest singular value, from the eigenvalues of
/// `FᵀF` found by Jacobi rotations.
pub fn condition_number(f_hist: &DMatrix<f64>) -> f64 {
    let mut g = f_hist.transpose() * f_hist;
    let n = g.nrows();
    for _ in 0..100 {
        for p in 0..n {
            for q in p + 1..n {
                if g[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (g[(q, q)] - g[(p, p)]) / (2.0 * g[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (gkp, gkq) = (g[(k, p)], g[(k, q)]);
                    g[(k, p)] = c * gkp - s * gkq;
                    g[(k, q)] = s * gkp + c * gkq;
                }
                for k in 0..n {
                    let (gpk, gqk) = (g[(p, k)], g[(q, k)]);
                    g[(p, k)] = c * gpk - s * gqk;
                    g[(q, k)] = s * gpk + c * gqk;
                }
            }
        }
    }
    let eig: Vec<f64> = (0..n).map(|i| g[(i, i)].max(0.0)).collect();
    let max = eig.iter().cloned().fold(0.0, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    (max / min).sqrt()
}

/// `G(x) = A x + b` without merit.
pub fn affine(a: DMatrix<f64>, b: DVector<f64>) -> FnProblem<'static> {
    let p = b.len();
    FnProblem::new(p, move |x| &a * x + &b)
}

/// Symmetric matrix with the given eigenvalues and a random eigenbasis.
pub fn symmetric_with_spectrum(rng: &mut ChaCha8Rng, eigenvalues: &[f64]) -> DMatrix<f64> {
    let p = eigenvalues.len();
    let q = gaussian_matrix(rng, p, p).qr().q();
    &q * DMatrix::from_diagonal(&DVector::from_column_slice(eigenvalues)) * q.transpose()
}

/// Neumaier-compensated summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
