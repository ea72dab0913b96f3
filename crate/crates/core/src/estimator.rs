//! Period scan, nine-point initialization and pattern search over
//! `(theta, delta)`.
//!
//! The hyperparameters are tuned on the profile `l_I(theta, delta) =
//! max_{p <= d* p_max} l(theta, delta, p, d*)`; the period is then picked by a
//! final scan over `p <= d p_max` at the tuned hyperparameters with the fine
//! resolution `d`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::kernel::{gcd, Hyperparams, PeriodSpec, Signal};
use crate::likelihood::{AcpgpNormalization, LikelihoodEval, PreparedPeriod};
use crate::search::{maximize, PatternOptions};

/// Which objective drives the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Variant {
    /// Exact profile log-likelihood.
    #[default]
    Cpgp,
    /// Normalized segment-only likelihood `l1 / (k p)`.
    Acpgp,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SearchConfig {
    pub p_max: usize,
    /// Resolution of the final period scan: candidate periods are `p / (d fs)`.
    pub d: usize,
    /// Resolution used while tuning `(theta, delta)`.
    pub d_star: usize,
    pub theta_range: (f64, f64),
    pub delta_range: (f64, f64),
    pub pattern: PatternOptions,
}

/// The settings of the transient-train benchmark: `p <= 500`,
/// `theta in [1, 30]`, `delta in [2, 20]`, `d = d* = 1`.
impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig::new(500, (1.0, 30.0), (2.0, 20.0))
    }
}

impl SearchConfig {
    pub fn new(p_max: usize, theta_range: (f64, f64), delta_range: (f64, f64)) -> Self {
        SearchConfig {
            p_max,
            d: 1,
            d_star: 1,
            theta_range,
            delta_range,
            pattern: PatternOptions::default(),
        }
    }

    pub fn with_resolution(mut self, d: usize, d_star: usize) -> Self {
        self.d = d;
        self.d_star = d_star;
        self
    }

    /// Checks the invariants. Ranges may collapse to a point (`lo == hi`),
    /// which pins that coordinate.
    pub fn validate(&self) -> Result<()> {
        if self.p_max == 0 {
            return Err(Error::invalid("p_max must be at least 1"));
        }
        if self.d == 0 || self.d_star == 0 || self.d_star > self.d {
            return Err(Error::invalid("need 1 <= d* <= d"));
        }
        for (name, (lo, hi)) in [("theta", self.theta_range), ("delta", self.delta_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return Err(Error::invalid(alloc::format!(
                    "{name} range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
                )));
            }
        }
        let o = &self.pattern;
        if !(o.initial_step > 0.0 && o.contraction > 0.0 && o.contraction < 1.0 && o.tolerance > 0.0) {
            return Err(Error::invalid("pattern search controls out of range"));
        }
        Ok(())
    }

    /// Largest `p` of the tuning scan.
    pub fn tuning_p_max(&self) -> usize {
        self.d_star * self.p_max
    }

    /// Largest `p` of the final scan.
    pub fn final_p_max(&self) -> usize {
        self.d * self.p_max
    }
}

/// Evaluates a function for every candidate `p`. Implementations may run
/// concurrently but must return results in index order.
pub trait PeriodMap {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every evaluation on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl PeriodMap for Sequential {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}

/// One period candidate and its objective value.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanPoint {
    pub p: usize,
    pub loglik: f64,
}

/// One evaluation of `l_I` during tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HyperPoint {
    pub theta: f64,
    pub delta: f64,
    pub best_p: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub variant: Variant,
    pub theta_hat: f64,
    pub delta_hat: f64,
    pub p_hat: usize,
    pub d: usize,
    pub fs: f64,
    /// `p_hat / (d fs)` in seconds.
    pub period: f64,
    /// `(numerator, denominator)` of `p_hat / d` in lowest terms; the period
    /// in seconds is `numerator / (denominator fs)`.
    pub period_fraction: (usize, usize),
    pub beta_hat: Vec<f64>,
    pub sigma2_hat: f64,
    pub loglik: f64,
    pub scan_trace: Vec<ScanPoint>,
    pub hyper_trace: Vec<HyperPoint>,
    pub init: (f64, f64),
}

impl FitResult {
    pub fn spec(&self, n: usize) -> PeriodSpec {
        PeriodSpec {
            p: self.p_hat,
            d: self.d,
            fs: self.fs,
            n,
        }
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            theta: self.theta_hat,
            delta: self.delta_hat,
        }
    }
}

/// The signal segmented once for every candidate `p`, shared by all
/// objective evaluations of a fit.
pub struct PeriodTable {
    periods: Vec<Result<PreparedPeriod>>,
    variant: Variant,
    normalization: AcpgpNormalization,
}

impl PeriodTable {
    pub fn new<E: PeriodMap>(signal: &Signal, p_max: usize, basis: &dyn Basis, variant: Variant, exec: &E) -> Self {
        let periods = exec.map(p_max, |i| PreparedPeriod::new(signal, i + 1, basis));
        PeriodTable {
            periods,
            variant,
            normalization: AcpgpNormalization::default(),
        }
    }

    pub fn with_normalization(mut self, normalization: AcpgpNormalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn p_max(&self) -> usize {
        self.periods.len()
    }

    pub fn evaluate(&self, p: usize, hyper: &Hyperparams, d: usize) -> Result<LikelihoodEval> {
        let prepared = self
            .periods
            .get(p.wrapping_sub(1))
            .ok_or_else(|| Error::invalid("p outside the prepared range"))?
            .as_ref()
            .map_err(Clone::clone)?;
        match self.variant {
            Variant::Cpgp => prepared.cpgp(hyper, d),
            Variant::Acpgp => prepared.acpgp(hyper, d, self.normalization),
        }
    }

    /// Objective for every `p` in `1..=p_max`; failures become `-inf`.
    pub fn scan<E: PeriodMap>(&self, hyper: &Hyperparams, d: usize, p_max: usize, exec: &E) -> Vec<ScanPoint> {
        let p_max = p_max.min(self.p_max());
        exec.map(p_max, |i| {
            let loglik = match self.evaluate(i + 1, hyper, d) {
                Ok(e) if !e.loglik.is_nan() => e.loglik,
                _ => f64::NEG_INFINITY,
            };
            ScanPoint { p: i + 1, loglik }
        })
    }
}

/// Argmax with ties resolved towards the smallest `p`. `None` when nothing is
/// finite.
pub fn best_of(scan: &[ScanPoint]) -> Option<ScanPoint> {
    let mut best: Option<ScanPoint> = None;
    for s in scan {
        if s.loglik == f64::NEG_INFINITY || s.loglik.is_nan() {
            continue;
        }
        if best.map_or(true, |b| s.loglik > b.loglik) {
            best = Some(*s);
        }
    }
    best
}

/// `max_{p <= d* p_max} l(theta, delta, p, d*)` and its argmax.
pub fn scan_objective(
    signal: &Signal,
    theta: f64,
    delta: f64,
    d_star: usize,
    p_max: usize,
    basis: &dyn Basis,
) -> Result<(usize, f64)> {
    let hyper = Hyperparams::new(theta, delta)?;
    if d_star == 0 || p_max == 0 {
        return Err(Error::invalid("p_max and d* must be at least 1"));
    }
    let table = PeriodTable::new(signal, d_star * p_max, basis, Variant::Cpgp, &Sequential);
    let scan = table.scan(&hyper, d_star, d_star * p_max, &Sequential);
    Ok(best_of(&scan).map_or((1, f64::NEG_INFINITY), |b| (b.p, b.loglik)))
}

fn grid_points((lo, hi): (f64, f64)) -> [f64; 3] {
    [lo, (lo * hi).sqrt(), hi]
}

struct Tuner<'a, E> {
    table: &'a PeriodTable,
    config: &'a SearchConfig,
    exec: &'a E,
    trace: Vec<HyperPoint>,
}

impl<E: PeriodMap> Tuner<'_, E> {
    fn objective(&mut self, theta: f64, delta: f64) -> f64 {
        let Ok(hyper) = Hyperparams::new(theta, delta) else {
            return f64::NEG_INFINITY;
        };
        let scan = self
            .table
            .scan(&hyper, self.config.d_star, self.config.tuning_p_max(), self.exec);
        let (best_p, objective) = best_of(&scan).map_or((0, f64::NEG_INFINITY), |b| (b.p, b.loglik));
        self.trace.push(HyperPoint {
            theta,
            delta,
            best_p,
            objective,
        });
        objective
    }

    fn init_grid(&mut self) -> Result<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        for theta in grid_points(self.config.theta_range) {
            for delta in grid_points(self.config.delta_range) {
                let v = self.objective(theta, delta);
                if v > f64::NEG_INFINITY && best.map_or(true, |b| v > b.2) {
                    best = Some((theta, delta, v));
                }
            }
        }
        best.ok_or(Error::InitializationFailed)
    }
}

/// Best of the 3 x 3 grid `{lo, sqrt(lo hi), hi}^2`.
pub fn init_grid<E: PeriodMap>(
    signal: &Signal,
    config: &SearchConfig,
    basis: &dyn Basis,
    variant: Variant,
    exec: &E,
) -> Result<(f64, f64)> {
    config.validate()?;
    let table = PeriodTable::new(signal, config.tuning_p_max(), basis, variant, exec);
    let mut tuner = Tuner {
        table: &table,
        config,
        exec,
        trace: Vec::new(),
    };
    tuner.init_grid().map(|(t, d, _)| (t, d))
}

/// Tuned `(theta, delta)`, the starting point and every evaluation of `l_I`.
pub struct Tuned {
    pub theta: f64,
    pub delta: f64,
    pub init: (f64, f64),
    pub trace: Vec<HyperPoint>,
}

pub fn optimize_hyperparams_with<E: PeriodMap>(table: &PeriodTable, config: &SearchConfig, exec: &E) -> Result<Tuned> {
    config.validate()?;
    let mut tuner = Tuner {
        table,
        config,
        exec,
        trace: Vec::new(),
    };
    let (theta0, delta0, _) = tuner.init_grid()?;
    let (tl, th) = config.theta_range;
    let (dl, dh) = config.delta_range;
    let mut f = |x: &[f64]| tuner.objective(x[0], x[1]);
    let result = maximize(&mut f, &[theta0, delta0], &[tl, dl], &[th, dh], &config.pattern);
    Ok(Tuned {
        theta: result.x[0],
        delta: result.x[1],
        init: (theta0, delta0),
        trace: tuner.trace,
    })
}

pub fn optimize_hyperparams<E: PeriodMap>(
    signal: &Signal,
    config: &SearchConfig,
    basis: &dyn Basis,
    variant: Variant,
    exec: &E,
) -> Result<Tuned> {
    config.validate()?;
    let table = PeriodTable::new(signal, config.tuning_p_max(), basis, variant, exec);
    optimize_hyperparams_with(&table, config, exec)
}

/// Full estimation: grid start, pattern search on `l_I`, final period scan.
pub fn fit<E: PeriodMap>(
    signal: &Signal,
    config: &SearchConfig,
    basis: &dyn Basis,
    variant: Variant,
    exec: &E,
) -> Result<FitResult> {
    config.validate()?;
    let table = PeriodTable::new(signal, config.final_p_max(), basis, variant, exec);
    fit_with_table(&table, signal.fs(), config, exec)
}

pub fn fit_with_table<E: PeriodMap>(table: &PeriodTable, fs: f64, config: &SearchConfig, exec: &E) -> Result<FitResult> {
    let tuned = optimize_hyperparams_with(table, config, exec)?;
    let hyper = Hyperparams::new(tuned.theta, tuned.delta)?;
    let scan_trace = table.scan(&hyper, config.d, config.final_p_max(), exec);
    let best = best_of(&scan_trace).ok_or(Error::FitFailed)?;
    let eval = table.evaluate(best.p, &hyper, config.d)?;
    let g = gcd(best.p, config.d);
    Ok(FitResult {
        variant: table.variant,
        theta_hat: tuned.theta,
        delta_hat: tuned.delta,
        p_hat: best.p,
        d: config.d,
        fs,
        period: best.p as f64 / (config.d as f64 * fs),
        period_fraction: (best.p / g, config.d / g),
        beta_hat: eval.beta_hat,
        sigma2_hat: eval.sigma2_hat,
        loglik: best.loglik,
        scan_trace,
        hyper_trace: tuned.trace,
        init: tuned.init,
    })
}
