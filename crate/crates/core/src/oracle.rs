//! Dense reference model: the full `n x n` covariance, GLS estimates, the
//! Gaussian log-likelihood and BLUP, all through plain Cholesky
//! factorizations.
//!
//! This module deliberately re-derives the kernel and every aggregate on its
//! own and uses nothing from the structured code paths, so that it can serve
//! as an independent check on them. It costs `O(n^3)` and refuses signals
//! longer than [`DEFAULT_CAP`] unless the cap is raised explicitly.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
#[allow(unused_imports)]
use num_traits::Float;

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::kernel::Signal;

pub const DEFAULT_CAP: usize = 2048;

fn kernel_on_grid(lag: i64, theta: f64, p: usize, d: usize) -> f64 {
    let r = ((d as i128) * (lag as i128)).rem_euclid(p as i128);
    let r = core::cmp::min(r, p as i128 - r) as f64;
    let s = (PI * r / p as f64).sin();
    (-theta * theta * s * s).exp()
}

fn kernel_continuous(dt: f64, theta: f64, p: usize, d: usize, fs: f64) -> f64 {
    let cycles = dt * d as f64 * fs / p as f64;
    let s = (PI * (cycles - cycles.floor())).sin();
    (-theta * theta * s * s).exp()
}

/// Dense GP with covariance `sigma^2 (K + delta^2 I)`.
pub struct DenseModel {
    pub y: DVector<f64>,
    pub fs: f64,
    pub theta: f64,
    pub delta: f64,
    pub p: usize,
    pub d: usize,
    /// `K + delta^2 I`.
    pub k_delta: DMatrix<f64>,
    /// Regression matrix, `n x q`.
    pub f: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    pub beta_hat: DVector<f64>,
    pub sigma2_hat: f64,
    pub loglik: f64,
    /// `(F^T K_delta^{-1} F)^{-1}`.
    fkf_inv: DMatrix<f64>,
}

/// Output of [`dense_loglik`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFit {
    pub loglik: f64,
    pub beta_hat: Vec<f64>,
    pub sigma2_hat: f64,
}

impl DenseModel {
    /// Builds the model on raw samples `y[i]` at `t_i = (i + 1) / fs`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        y: &[f64],
        fs: f64,
        theta: f64,
        delta: f64,
        p: usize,
        d: usize,
        basis: &dyn Basis,
        cap: usize,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::invalid("empty signal"));
        }
        if n > cap {
            return Err(Error::OracleCapExceeded { n, cap });
        }
        if p == 0 || d == 0 || !(theta > 0.0) || !(delta > 0.0) || !(fs > 0.0) {
            return Err(Error::invalid("oracle parameters out of range"));
        }
        let q = basis.dim();
        let mut k_delta = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                k_delta[(i, j)] = kernel_on_grid(i as i64 - j as i64, theta, p, d);
            }
            k_delta[(i, i)] += delta * delta;
        }
        let mut f = DMatrix::<f64>::zeros(n, q);
        let mut row = vec![0.0; q];
        for i in 0..n {
            basis.eval((i + 1) as f64 / fs, &mut row);
            for a in 0..q {
                f[(i, a)] = row[a];
            }
        }
        let chol = Cholesky::new(k_delta.clone()).ok_or(Error::NotPositiveDefinite {
            index: 0,
            pivot: f64::NAN,
        })?;
        let y = DVector::from_column_slice(y);
        let kinv_f = chol.solve(&f);
        let kinv_y = chol.solve(&y);
        let fkf = f.transpose() * &kinv_f;
        let fkf_chol = Cholesky::new(fkf).ok_or(Error::RankDeficientBasis)?;
        let fkf_inv = fkf_chol.inverse();
        let beta_hat = fkf_chol.solve(&(f.transpose() * &kinv_y));
        let resid = &y - &f * &beta_hat;
        let sigma2_hat = resid.dot(&chol.solve(&resid)) / n as f64;
        let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let nf = n as f64;
        let mean_square = y.dot(&y) / nf;
        let loglik = if sigma2_hat > 1e-20 * mean_square {
            -0.5 * (nf * sigma2_hat.ln() + logdet + nf + nf * (2.0 * PI).ln())
        } else {
            f64::NEG_INFINITY
        };
        Ok(DenseModel {
            y,
            fs,
            theta,
            delta,
            p,
            d,
            k_delta,
            f,
            chol,
            beta_hat,
            sigma2_hat,
            loglik,
            fkf_inv,
        })
    }

    pub fn from_signal(signal: &Signal, theta: f64, delta: f64, p: usize, d: usize, basis: &dyn Basis) -> Result<Self> {
        Self::new(signal.values(), signal.fs(), theta, delta, p, d, basis, DEFAULT_CAP)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Gaussian log-density of `y` at arbitrary `(beta, sigma2)`.
    pub fn loglik_at(&self, beta: &[f64], sigma2: f64) -> f64 {
        let n = self.len() as f64;
        let resid = &self.y - &self.f * DVector::from_column_slice(beta);
        let quad = resid.dot(&self.chol.solve(&resid));
        let logdet: f64 = 2.0 * self.chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        -0.5 * (n * (2.0 * PI * sigma2).ln() + logdet + quad / sigma2)
    }

    /// BLUP mean and variance at time `t`.
    pub fn blup(&self, t: f64, basis: &dyn Basis) -> (f64, f64) {
        let n = self.len();
        let r = DVector::from_fn(n, |i, _| {
            kernel_continuous(t - (i + 1) as f64 / self.fs, self.theta, self.p, self.d, self.fs)
        });
        let mut fv = vec![0.0; basis.dim()];
        basis.eval(t, &mut fv);
        let f_t = DVector::from_vec(fv);
        let kinv_r = self.chol.solve(&r);
        let resid = &self.y - &self.f * &self.beta_hat;
        let mean = f_t.dot(&self.beta_hat) + kinv_r.dot(&resid);
        let omega = &f_t - self.f.transpose() * &kinv_r;
        let unit = 1.0 + self.delta * self.delta - r.dot(&kinv_r) + omega.dot(&(&self.fkf_inv * &omega));
        (mean, self.sigma2_hat * unit)
    }
}

/// Dense log-likelihood with GLS estimates, for signals up to [`DEFAULT_CAP`].
pub fn dense_loglik(signal: &Signal, theta: f64, delta: f64, p: usize, d: usize, basis: &dyn Basis) -> Result<DenseFit> {
    let model = DenseModel::from_signal(signal, theta, delta, p, d, basis)?;
    Ok(DenseFit {
        loglik: model.loglik,
        beta_hat: model.beta_hat.iter().copied().collect(),
        sigma2_hat: model.sigma2_hat,
    })
}

pub fn dense_blup(t: f64, model: &DenseModel, basis: &dyn Basis) -> (f64, f64) {
    model.blup(t, basis)
}

/// Result of checking the block structure of a dense covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub passed: bool,
    pub max_deviation: f64,
    /// First violated property and the `(row, column)` where it shows.
    pub failure: Option<(String, usize, usize)>,
}

const LAYOUT_TOL: f64 = 1e-14;

/// Checks that the kernel matrix of `n` grid points splits into identical
/// `p x p` symmetric circulant blocks, identical `p x m` cross blocks equal
/// to the first `m` columns of the circulant, and a Toeplitz `m x m` corner
/// equal to the leading block of the circulant.
pub fn dense_decomposition_check(n: usize, theta: f64, p: usize, d: usize) -> Result<DecompositionReport> {
    if n > DEFAULT_CAP {
        return Err(Error::OracleCapExceeded { n, cap: DEFAULT_CAP });
    }
    if p == 0 || d == 0 || !(theta > 0.0) {
        return Err(Error::invalid("oracle parameters out of range"));
    }
    let k = DMatrix::from_fn(n, n, |i, j| kernel_on_grid(i as i64 - j as i64, theta, p, d));
    Ok(check_block_layout(&k, p))
}

/// Layout check on an explicit kernel matrix (without nugget).
pub fn check_block_layout(kmat: &DMatrix<f64>, p: usize) -> DecompositionReport {
    let n = kmat.nrows();
    let segs = n / p;
    let m = n - segs * p;
    let mut max_dev = 0.0f64;
    let mut failure: Option<(String, usize, usize)> = None;
    let mut note = |what: &str, dev: f64, i: usize, j: usize, failure: &mut Option<(String, usize, usize)>| {
        let dev = if dev.is_nan() { f64::INFINITY } else { dev };
        max_dev = max_dev.max(dev);
        if dev > LAYOUT_TOL && failure.is_none() {
            *failure = Some((String::from(what), i, j));
        }
    };
    if segs > 0 {
        // the leading block as reference circulant: symmetry and cyclic shifts
        for i in 0..p {
            for j in 0..p {
                note("symmetry", (kmat[(i, j)] - kmat[(j, i)]).abs(), i, j, &mut failure);
                let shift = (j + p - i) % p;
                note("circulant", (kmat[(i, j)] - kmat[(0, shift)]).abs(), i, j, &mut failure);
            }
        }
        for j in 1..p {
            note("circulant row symmetry", (kmat[(0, j)] - kmat[(0, p - j)]).abs(), 0, j, &mut failure);
        }
        for r in 0..segs {
            for s in 0..segs {
                for i in 0..p {
                    for j in 0..p {
                        let (a, b) = (r * p + i, s * p + j);
                        note("segment block", (kmat[(a, b)] - kmat[(i, j)]).abs(), a, b, &mut failure);
                    }
                }
            }
        }
        for r in 0..segs {
            for i in 0..p {
                for j in 0..m {
                    let (a, b) = (r * p + i, segs * p + j);
                    note("cross block", (kmat[(a, b)] - kmat[(i, j)]).abs(), a, b, &mut failure);
                }
            }
        }
    }
    let base = segs * p;
    for i in 0..m {
        for j in 0..m {
            let (a, b) = (base + i, base + j);
            let toeplitz = kmat[(base + i.abs_diff(j), base)];
            note("remainder toeplitz", (kmat[(a, b)] - toeplitz).abs(), a, b, &mut failure);
            if segs > 0 {
                note("remainder block", (kmat[(a, b)] - kmat[(i, j)]).abs(), a, b, &mut failure);
            }
        }
    }
    DecompositionReport {
        passed: failure.is_none(),
        max_deviation: max_dev,
        failure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Constant;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_is_scalar_gaussian() {
        let m = DenseModel::new(&[1.7], 1.0, 2.0, 0.5, 3, 1, &Constant, DEFAULT_CAP).unwrap();
        assert!((m.beta_hat[0] - 1.7).abs() < 1e-15);
        assert_eq!(m.loglik, f64::NEG_INFINITY);
        // with beta fixed at 0 the density is N(1.7; 0, s2 (1 + delta^2))
        let s2 = 0.8;
        let var = s2 * 1.25;
        let want = -0.5 * ((2.0 * PI * var).ln() + 1.7 * 1.7 / var);
        assert!((m.loglik_at(&[0.0], s2) - want).abs() < 1e-13);
    }

    #[test]
    fn large_nugget_approaches_white_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let v: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = v.iter().sum::<f64>() / 60.0;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 60.0;
        let m = DenseModel::new(&v, 1.0, 3.0, 1e3, 7, 1, &Constant, DEFAULT_CAP).unwrap();
        let ratio = m.sigma2_hat * 1e6 / var;
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn cap_is_enforced() {
        let v = vec![0.0; 20];
        assert!(matches!(
            DenseModel::new(&v, 1.0, 1.0, 1.0, 3, 1, &Constant, 10),
            Err(Error::OracleCapExceeded { n: 20, cap: 10 })
        ));
    }

    #[test]
    fn decomposition_layout_holds_and_detects_corruption() {
        assert!(dense_decomposition_check(9, 2.0, 1, 1).unwrap().passed);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let n = rng.random_range(2..60);
            let p = rng.random_range(1..20);
            let d = rng.random_range(1..4);
            let theta = rng.random_range(0.5..30.0);
            let r = dense_decomposition_check(n, theta, p, d).unwrap();
            assert!(r.passed, "n={n} p={p} d={d}: {r:?}");
        }
        let mut k = DMatrix::from_fn(11, 11, |i, j| kernel_on_grid(i as i64 - j as i64, 2.0, 4, 1));
        k[(5, 2)] += 1e-6;
        let r = check_block_layout(&k, 4);
        assert!(!r.passed);
        let (_, i, j) = r.failure.unwrap();
        assert!(i == 5 || j == 5 || i == 2 || j == 2, "({i},{j})");
    }

    #[test]
    fn blup_interpolates_training_point_with_tiny_nugget() {
        let v: Vec<f64> = (0..16).map(|i| ((i % 4) as f64).sin()).collect();
        let m = DenseModel::new(&v, 1.0, 2.0, 1e-4, 4, 1, &Constant, DEFAULT_CAP).unwrap();
        let (mean, var) = m.blup(3.0, &Constant);
        assert!((mean - v[2]).abs() < 1e-6);
        assert!(var >= -1e-12);
    }
}
