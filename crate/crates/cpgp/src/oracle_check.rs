//! Randomized comparisons of the structured computations with the dense
//! model: profile likelihood, the segment covariance inverse and
//! determinant, prediction, and the block layout of the kernel matrix.

use cpgp_core::basis::{Basis, Constant, Polynomial};
use cpgp_core::fft::FftPlan;
use cpgp_core::kernel::{build_kernel_blocks, PeriodSpec};
use cpgp_core::likelihood::SegmentCovariance;
use cpgp_core::oracle::{check_block_layout, dense_decomposition_check, DenseModel, DEFAULT_CAP};
use cpgp_core::{profile_loglik, Hyperparams, PredictorState, Signal};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::OracleSettings;
use crate::error::Result;

pub const LOGLIK_TOL: f64 = 1e-8;
pub const INVERSE_TOL: f64 = 1e-9;
pub const LOGDET_TOL: f64 = 1e-9;
pub const BLUP_MEAN_TOL: f64 = 1e-8;
pub const BLUP_VAR_TOL: f64 = 1e-7;
pub const QUERIES_PER_INSTANCE: usize = 5;

/// Relative perturbation of `theta` on the dense side under `corrupt_kernel`.
const CORRUPTION: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct Instance {
    pub signal: Signal,
    pub p: usize,
    pub d: usize,
    pub theta: f64,
    pub delta: f64,
}

/// `n <= 64`, `p <= 16`, `d in 1..=3`, `theta in [1, 30]`, `delta in [0.1, 10]`.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.random_range(2..=64);
    let p = rng.random_range(1..=16);
    let d = rng.random_range(1..=3);
    let theta = rng.random_range(1.0..=30.0);
    let delta = rng.random_range(0.1..=10.0);
    let fs = [1.0, 2.0, 0.5][rng.random_range(0..3)];
    let values = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    Instance {
        signal: Signal::new(values, fs).expect("at least two finite samples"),
        p,
        d,
        theta,
        delta,
    }
}

pub fn instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn dense_theta(theta: f64, corrupt: bool) -> f64 {
    if corrupt {
        theta * (1.0 + CORRUPTION)
    } else {
        theta
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LikelihoodSummary {
    pub instances: usize,
    pub failures: usize,
    /// Largest `|l - l_dense| / max(1, |l_dense|)`.
    pub max_loglik_error: f64,
    pub max_sigma2_error: f64,
    pub passed: bool,
}

/// Profile log-likelihood against the dense model. Every fourth instance uses
/// a linear trend basis instead of a constant.
pub fn likelihood_suite(cases: &[Instance], corrupt: bool) -> Result<LikelihoodSummary> {
    let linear = Polynomial { degree: 1, scale: 32.0 };
    let mut s = LikelihoodSummary {
        instances: cases.len(),
        ..Default::default()
    };
    for (i, c) in cases.iter().enumerate() {
        let basis: &dyn Basis = if i % 4 == 3 { &linear } else { &Constant };
        let fast = profile_loglik(&c.signal, c.theta, c.delta, c.p, c.d, basis)?;
        let dense = DenseModel::from_signal(&c.signal, dense_theta(c.theta, corrupt), c.delta, c.p, c.d, basis)?;
        let e = rel(fast.loglik, dense.loglik);
        let e = if e.is_nan() { f64::INFINITY } else { e };
        s.max_loglik_error = s.max_loglik_error.max(e);
        s.max_sigma2_error = s.max_sigma2_error.max(rel(fast.sigma2_hat, dense.sigma2_hat));
        if e > LOGLIK_TOL {
            s.failures += 1;
        }
    }
    s.passed = s.failures == 0;
    Ok(s)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IdentitySummary {
    /// Instances with at least one whole segment.
    pub instances: usize,
    pub failures: usize,
    /// Largest `max_i |(Sigma^{-1} v)_i - dense_i| / max_i |dense_i|`.
    pub max_inverse_error: f64,
    /// Largest `|log|Sigma| - dense| / n`.
    pub max_logdet_error_per_n: f64,
    pub passed: bool,
}

/// Inverse and log-determinant of the segment covariance against dense
/// Cholesky factorizations.
pub fn identity_suite(cases: &[Instance], seed: u64, corrupt: bool) -> Result<IdentitySummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut s = IdentitySummary::default();
    for c in cases {
        let spec = PeriodSpec::for_signal(&c.signal, c.p, c.d)?;
        let k = spec.k();
        if k == 0 {
            continue;
        }
        s.instances += 1;
        let kp = k * c.p;
        let hyper = Hyperparams::new(c.theta, c.delta)?;
        let blocks = build_kernel_blocks(&spec, &hyper);
        let cov = SegmentCovariance::new(&blocks, k, &hyper, FftPlan::new(c.p))?;
        let head = DenseModel::new(
            &c.signal.values()[..kp],
            c.signal.fs(),
            dense_theta(c.theta, corrupt),
            c.delta,
            c.p,
            c.d,
            &Constant,
            DEFAULT_CAP,
        )?;
        let chol = head.k_delta.clone().cholesky().expect("dense covariance is positive definite");
        let v: Vec<f64> = (0..kp).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = cov.inverse_apply(&v)?;
        let want = chol.solve(&DVector::from_column_slice(&v));
        let scale = want.amax().max(f64::MIN_POSITIVE);
        let inv_err = fast.iter().zip(want.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        let logdet = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        let ld_err = (cov.logdet_sigma() - logdet).abs() / c.signal.len() as f64;
        s.max_inverse_error = s.max_inverse_error.max(inv_err);
        s.max_logdet_error_per_n = s.max_logdet_error_per_n.max(ld_err);
        if !(inv_err <= INVERSE_TOL && ld_err <= LOGDET_TOL) {
            s.failures += 1;
        }
    }
    s.passed = s.failures == 0;
    Ok(s)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BlupSummary {
    pub instances: usize,
    pub queries: usize,
    pub failures: usize,
    /// Largest `|y - y_dense| / (1 + |y_dense|)`.
    pub max_mean_error: f64,
    /// Largest `|v - v_dense| / v_dense` over queries with a variance above
    /// rounding level.
    pub max_variance_error: f64,
    pub passed: bool,
}

/// Prediction means and variances at on-grid and off-grid times.
pub fn blup_suite(cases: &[Instance], seed: u64, corrupt: bool) -> Result<BlupSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1u64);
    let mut s = BlupSummary {
        instances: cases.len(),
        ..Default::default()
    };
    for c in cases {
        let hyper = Hyperparams::new(c.theta, c.delta)?;
        let state = PredictorState::new(&c.signal, hyper, c.p, c.d, Constant)?;
        let dense = DenseModel::from_signal(&c.signal, dense_theta(c.theta, corrupt), c.delta, c.p, c.d, &Constant)?;
        let n = c.signal.len();
        for j in 0..QUERIES_PER_INSTANCE {
            let t = if j % 2 == 0 {
                c.signal.time(rng.random_range(0..n))
            } else {
                rng.random_range(-5.0..(n as f64 + 5.0)) / c.signal.fs()
            };
            s.queries += 1;
            let fast = state.predict(t)?;
            let (mean, var) = dense.blup(t, &Constant);
            let var = var.max(0.0);
            let mean_err = (fast.mean - mean).abs() / (1.0 + mean.abs());
            // variances at rounding level are compared absolutely
            let floor = 1e-13 * dense.sigma2_hat;
            let var_err = (fast.variance - var).abs();
            let var_ok = var_err <= BLUP_VAR_TOL * var + floor;
            if var > floor / BLUP_VAR_TOL {
                s.max_variance_error = s.max_variance_error.max(var_err / var);
            }
            s.max_mean_error = s.max_mean_error.max(mean_err);
            if !(mean_err <= BLUP_MEAN_TOL && var_ok) {
                s.failures += 1;
            }
        }
    }
    s.passed = s.failures == 0;
    Ok(s)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LayoutSummary {
    pub draws: usize,
    pub failures: usize,
    pub max_deviation: f64,
    /// First failing check as `(property, row, column)`.
    pub first_failure: Option<(String, usize, usize)>,
    pub passed: bool,
}

/// Block layout of the dense kernel matrix over random `(n, p, d, theta)`.
pub fn layout_suite(draws: usize, seed: u64, corrupt: bool) -> Result<LayoutSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1a);
    let mut s = LayoutSummary {
        draws,
        ..Default::default()
    };
    for _ in 0..draws {
        let n = rng.random_range(1..=80);
        let p = rng.random_range(1..=20);
        let d = rng.random_range(1..=4);
        let theta = rng.random_range(0.5..30.0);
        let report = if corrupt {
            let y = vec![0.0; n.max(2)];
            let model = DenseModel::new(&y, 1.0, theta, 1.0, p, d, &Constant, DEFAULT_CAP)?;
            let mut kmat: DMatrix<f64> = model.k_delta - DMatrix::identity(y.len(), y.len());
            let (i, j) = (rng.random_range(0..y.len()), rng.random_range(0..y.len()));
            kmat[(i, j)] += 1e-6;
            check_block_layout(&kmat, p)
        } else {
            dense_decomposition_check(n, theta, p, d)?
        };
        s.max_deviation = s.max_deviation.max(report.max_deviation);
        if !report.passed {
            s.failures += 1;
            if s.first_failure.is_none() {
                s.first_failure = report.failure;
            }
        }
    }
    s.passed = s.failures == 0;
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub seed: u64,
    pub corrupt_kernel: bool,
    pub likelihood: LikelihoodSummary,
    pub identities: IdentitySummary,
    pub blup: BlupSummary,
    pub layout: LayoutSummary,
    pub passed: bool,
}

pub fn run_suite(settings: &OracleSettings, seed: u64) -> Result<OracleReport> {
    let corrupt = settings.corrupt_kernel;
    let cases = instances(settings.instances, seed);
    let likelihood = likelihood_suite(&cases, corrupt)?;
    let identities = identity_suite(&cases, seed, corrupt)?;
    let blup_cases = instances(settings.blup_instances, seed.wrapping_add(1));
    let blup = blup_suite(&blup_cases, seed, corrupt)?;
    let layout = layout_suite(settings.layout_draws, seed, corrupt)?;
    let passed = likelihood.passed && identities.passed && blup.passed && layout.passed;
    Ok(OracleReport {
        seed,
        corrupt_kernel: corrupt,
        likelihood,
        identities,
        blup,
        layout,
        passed,
    })
}
