//! Best linear unbiased prediction at arbitrary times.
//!
//! Everything that does not depend on the query time is computed once:
//! `R_delta^{-1}(ybar - Gamma_bar beta)`, `R_delta^{-1} Gamma_bar`, the
//! factorization of `Pi` with `Pi^{-1}(y_dot - Gamma_dot beta)` and
//! `Pi^{-1} Gamma_dot`, and the Cholesky factor of
//! `M = S_GG + eta Gamma_dot^T Pi^{-1} Gamma_dot`. A query then costs one
//! pair of length-`p` FFTs plus an `O(m^2)` triangular solve for the variance.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::estimator::FitResult;
use crate::kernel::{continuous_correlation, Hyperparams, PeriodSpec, Signal};
use crate::likelihood::{normal_equations, PreparedPeriod, Terms, Whitened};
use crate::small::{dot, SmallCholesky};

/// Variances down to this fraction of `-sigma2` are rounding and clamp to 0.
pub const VARIANCE_CLAMP: f64 = 1e-10;

pub struct PredictorState<B> {
    basis: B,
    hyper: Hyperparams,
    spec: PeriodSpec,
    terms: Terms,
    beta: Vec<f64>,
    sigma2: f64,
    /// `R_delta^{-1}(ybar - Gamma_bar beta)`.
    alpha: Vec<f64>,
    /// `R_delta^{-1} Gamma_bar`, one column per basis function.
    rdelta_inv_g: Vec<Vec<f64>>,
    /// `Pi^{-1}(y_dot - Gamma_dot beta)`.
    rho: Vec<f64>,
    /// `Pi^{-1} Gamma_dot`.
    pi_inv_g: Vec<Vec<f64>>,
    m_factor: SmallCholesky,
}

/// Correlations of a query time with the first segment and the remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCorrelations {
    /// `gamma_bar(t)`, length `p` (empty when there is no whole segment).
    pub gamma_bar: Vec<f64>,
    /// `gamma*(t)`, length `m`.
    pub gamma_star: Vec<f64>,
    /// `gamma_dot(t) = gamma* - (k / delta^2) R_bullet^T R_delta^{-1} gamma_bar`.
    pub gamma_dot: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prediction {
    pub t: f64,
    pub mean: f64,
    pub variance: f64,
}

impl<B: Basis> PredictorState<B> {
    /// Conditions on `signal` at the fitted `(theta, delta, p, d)`. The
    /// regression coefficients and scale are the exact GLS estimates at those
    /// hyperparameters, whichever objective produced them.
    pub fn from_fit(signal: &Signal, fit: &FitResult, basis: B) -> Result<Self> {
        Self::new(signal, fit.hyperparams(), fit.p_hat, fit.d, basis)
    }

    pub fn new(signal: &Signal, hyper: Hyperparams, p: usize, d: usize, basis: B) -> Result<Self> {
        let hyper = Hyperparams::new(hyper.theta, hyper.delta)?;
        let spec = PeriodSpec::for_signal(signal, p, d)?;
        let prepared = PreparedPeriod::new(signal, p, &basis)?;
        let terms = prepared.terms(&hyper, d)?;
        let eval = prepared.cpgp_from_terms(&terms, &hyper, d)?;
        let seg = prepared.segmented();
        let beta = eval.beta_hat;
        let sigma2 = eval.sigma2_hat;
        let q = beta.len();

        let (alpha, rdelta_inv_g) = if seg.k > 0 {
            let rd = &terms.cov.rdelta;
            let mut resid = seg.segment_mean.clone();
            for (a, col) in seg.basis_mean.iter().enumerate() {
                for (r, g) in resid.iter_mut().zip(col) {
                    *r -= beta[a] * g;
                }
            }
            (rd.solve(&resid)?, rd.solve_block(&seg.basis_mean)?)
        } else {
            (Vec::new(), vec![Vec::new(); q])
        };

        let white = terms.rem.as_ref().map(Whitened::new);
        let (mat, _) = normal_equations(&terms.stats, white.as_ref());
        let m_factor = SmallCholesky::new(&mat, q)?;
        let (rho, pi_inv_g) = match &terms.rem {
            Some(rem) => {
                let mut r = rem.y_dot.clone();
                for (a, col) in rem.g_dot.iter().enumerate() {
                    for (ri, g) in r.iter_mut().zip(col) {
                        *ri -= beta[a] * g;
                    }
                }
                (
                    rem.pi_factor.solve(&r),
                    rem.g_dot.iter().map(|c| rem.pi_factor.solve(c)).collect(),
                )
            }
            None => (Vec::new(), vec![Vec::new(); q]),
        };

        Ok(PredictorState {
            basis,
            hyper,
            spec,
            terms,
            beta,
            sigma2,
            alpha,
            rdelta_inv_g,
            rho,
            pi_inv_g,
            m_factor,
        })
    }

    pub fn beta_hat(&self) -> &[f64] {
        &self.beta
    }

    pub fn sigma2_hat(&self) -> f64 {
        self.sigma2
    }

    pub fn hyperparams(&self) -> Hyperparams {
        self.hyper
    }

    pub fn spec(&self) -> PeriodSpec {
        self.spec
    }

    fn time(&self, index: usize) -> f64 {
        (index + 1) as f64 / self.spec.fs
    }

    pub fn cross_correlations(&self, t: f64) -> CrossCorrelations {
        let (k, p, m) = (self.spec.k(), self.spec.p, self.spec.m());
        let period = self.spec.period();
        let theta = self.hyper.theta;
        let corr = |i: usize| continuous_correlation(t - self.time(i), theta, period);
        let gamma_bar: Vec<f64> = if k > 0 { (0..p).map(corr).collect() } else { Vec::new() };
        let gamma_star: Vec<f64> = (0..m).map(|j| corr(k * p + j)).collect();
        let gamma_dot = if k > 0 && m > 0 {
            let spec = self.terms.cov.kernel.plan().forward_real(&gamma_bar);
            let smooth = self.terms.cov.smooth(&spec);
            gamma_star.iter().zip(&smooth).map(|(a, b)| a - b).collect()
        } else {
            gamma_star.clone()
        };
        CrossCorrelations {
            gamma_bar,
            gamma_star,
            gamma_dot,
        }
    }

    pub fn predict(&self, t: f64) -> Result<Prediction> {
        if !t.is_finite() {
            return Err(Error::invalid("prediction time must be finite"));
        }
        let q = self.beta.len();
        let k = self.spec.k() as f64;
        let delta2 = self.hyper.delta * self.hyper.delta;
        let cc = self.cross_correlations(t);
        let mut f = vec![0.0; q];
        self.basis.eval(t, &mut f);

        let mut mean = dot(&f, &self.beta);
        let mut pi_t = 1.0 + delta2;
        let mut omega = f;
        if !cc.gamma_bar.is_empty() {
            let scale = k / delta2;
            mean += scale * dot(&cc.gamma_bar, &self.alpha);
            let spec: Vec<Complex64> = self.terms.cov.kernel.plan().forward_real(&cc.gamma_bar);
            pi_t -= scale * self.terms.cov.rdelta.inverse_form(&spec, &spec)?;
            for (o, col) in omega.iter_mut().zip(&self.rdelta_inv_g) {
                *o -= scale * dot(col, &cc.gamma_bar);
            }
        }
        let mut explained = 0.0;
        if let Some(rem) = &self.terms.rem {
            mean += dot(&cc.gamma_dot, &self.rho);
            let w = rem.pi_factor.forward(&cc.gamma_dot);
            explained = dot(&w, &w);
            for (o, col) in omega.iter_mut().zip(&self.pi_inv_g) {
                *o -= dot(col, &cc.gamma_dot);
            }
        }
        let unit = pi_t - explained + self.m_factor.inverse_form(&omega);
        let mut variance = self.sigma2 * unit;
        if variance < 0.0 {
            if variance >= -VARIANCE_CLAMP * self.sigma2 {
                variance = 0.0;
            } else {
                return Err(Error::Numerical {
                    theta: self.hyper.theta,
                    delta: self.hyper.delta,
                    p: self.spec.p,
                    what: "negative prediction variance",
                });
            }
        }
        Ok(Prediction { t, mean, variance })
    }

    /// [`PredictorState::predict`] over a batch of times.
    pub fn denoise(&self, times: &[f64]) -> Result<Vec<Prediction>> {
        times.iter().map(|&t| self.predict(t)).collect()
    }

    /// Predictions at the training times `t_i = i / fs`.
    pub fn denoise_training_grid(&self) -> Result<Vec<Prediction>> {
        let times: Vec<f64> = (0..self.spec.n).map(|i| self.time(i)).collect();
        self.denoise(&times)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Constant;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(n: usize, seed: u64) -> Signal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Signal::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect(), 1.0).unwrap()
    }

    fn state(s: &Signal, p: usize) -> PredictorState<Constant> {
        PredictorState::new(s, Hyperparams::new(2.5, 0.8).unwrap(), p, 1, Constant).unwrap()
    }

    #[test]
    fn first_sample_correlation_is_one_and_periodic() {
        let s = random_signal(14, 1);
        let st = state(&s, 4);
        let a = st.cross_correlations(1.0);
        assert_eq!(a.gamma_bar[0], 1.0);
        let b = st.cross_correlations(1.0 + 4.0);
        for (x, y) in a.gamma_bar.iter().zip(&b.gamma_bar) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_signal_predicts_constant() {
        let s = Signal::new(vec![3.25; 13], 1.0).unwrap();
        let st = state(&s, 5);
        for t in [0.3, 1.0, 7.7, 20.0, -4.0] {
            let pr = st.predict(t).unwrap();
            assert!((pr.mean - 3.25).abs() < 1e-12);
            assert!(pr.variance.abs() < 1e-20);
        }
    }

    #[test]
    fn correction_term_is_periodic_without_remainder() {
        let s = random_signal(12, 2);
        let st = state(&s, 4);
        for t in [0.5, 2.0, 3.3] {
            let a = st.predict(t).unwrap();
            let b = st.predict(t + 4.0).unwrap();
            assert!((a.mean - b.mean).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_matches_pointwise() {
        let s = random_signal(11, 3);
        let st = state(&s, 4);
        assert!(st.denoise(&[]).unwrap().is_empty());
        let one = st.denoise(&[2.5]).unwrap();
        assert_eq!(one[0], st.predict(2.5).unwrap());
        assert_eq!(st.denoise_training_grid().unwrap().len(), 11);
    }

    #[test]
    fn remainder_only_when_period_exceeds_length() {
        let s = random_signal(9, 4);
        let st = state(&s, 12);
        let pr = st.predict(3.0).unwrap();
        assert!(pr.mean.is_finite() && pr.variance >= 0.0);
    }

    #[test]
    fn small_nugget_interpolates_noiseless_periodic_signal() {
        let v: Vec<f64> = (0..60).map(|i| (2.0 * PI * (i % 6) as f64 / 6.0).sin()).collect();
        let s = Signal::new(v.clone(), 1.0).unwrap();
        let st = PredictorState::new(&s, Hyperparams::new(2.0, 1e-3).unwrap(), 6, 1, Constant).unwrap();
        let out = st.denoise_training_grid().unwrap();
        let err = out.iter().zip(&v).map(|(p, y)| (p.mean - y).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-3, "max error {err}");
    }
}
