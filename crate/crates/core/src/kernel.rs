//! Periodic correlation on a sampling grid and the structured blocks it
//! induces.
//!
//! For samples `t_i = i / fs` and period `T = p / (d fs)` the correlation of two
//! grid points only depends on the integer lag `i - j`:
//!
//! ```text
//! psi(lag) = exp(-theta^2 sin^2(pi d lag / p))
//! ```
//!
//! which is periodic in `lag` with period `p`. Within a segment of `p`
//! consecutive samples the correlation matrix `R` is therefore symmetric
//! circulant, the segment-to-remainder block `R•` is its first `m` columns and
//! the remainder block `R*` its leading `m x m` corner.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Grid-sampled observations `y(t_i)`, `t_i = i / fs`, `i = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<f64>,
    fs: f64,
}

impl Signal {
    pub fn new(values: Vec<f64>, fs: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("a signal needs at least two samples"));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::invalid("sampling frequency must be positive and finite"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "sample {} is not finite",
                i + 1
            )));
        }
        Ok(Signal { values, fs })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Timestamp of the 0-based sample `index`, i.e. `(index + 1) / fs`.
    pub fn time(&self, index: usize) -> f64 {
        (index + 1) as f64 / self.fs
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Candidate period `T = p / (d fs)` together with the segmentation it induces
/// on a signal of length `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodSpec {
    pub p: usize,
    pub d: usize,
    pub fs: f64,
    pub n: usize,
}

impl PeriodSpec {
    pub fn new(p: usize, d: usize, fs: f64, n: usize) -> Result<Self> {
        if p == 0 || d == 0 {
            return Err(Error::invalid("p and d must be at least 1"));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::invalid("sampling frequency must be positive and finite"));
        }
        Ok(PeriodSpec { p, d, fs, n })
    }

    pub fn for_signal(signal: &Signal, p: usize, d: usize) -> Result<Self> {
        Self::new(p, d, signal.fs(), signal.len())
    }

    /// Number of whole segments `floor(n / p)`.
    pub fn k(&self) -> usize {
        self.n / self.p
    }

    /// Remainder size `n - k p`.
    pub fn m(&self) -> usize {
        self.n - self.k() * self.p
    }

    /// 1 when a remainder block exists.
    pub fn eta(&self) -> usize {
        usize::from(self.m() > 0)
    }

    /// Period in seconds.
    pub fn period(&self) -> f64 {
        self.p as f64 / (self.d as f64 * self.fs)
    }

    /// `(p, d)` reduced to lowest terms.
    pub fn reduced(&self) -> (usize, usize) {
        let g = gcd(self.p, self.d);
        (self.p / g, self.d / g)
    }
}

pub(crate) fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Kernel roughness `theta` and noise-to-signal ratio `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Hyperparams {
    pub theta: f64,
    pub delta: f64,
}

impl Hyperparams {
    pub fn new(theta: f64, delta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::invalid("theta must be positive and finite"));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::invalid("delta must be positive and finite"));
        }
        Ok(Hyperparams { theta, delta })
    }
}

/// `exp(-theta^2 sin^2(pi d lag / p))` for an integer lag.
///
/// `d * lag` is reduced modulo `p` in integer arithmetic first, so the value
/// at `lag` and at `lag mod p` are bit-identical.
pub fn periodic_correlation(lag: i64, theta: f64, p: usize, d: usize) -> Result<f64> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::invalid("theta must be positive and finite"));
    }
    if p == 0 || d == 0 {
        return Err(Error::invalid("p and d must be at least 1"));
    }
    Ok(grid_correlation(lag, theta, p, d))
}

#[inline]
pub(crate) fn grid_correlation(lag: i64, theta: f64, p: usize, d: usize) -> f64 {
    let p_i = p as i128;
    let r = (d as i128 * lag as i128).rem_euclid(p_i);
    // sin^2(pi r / p) = sin^2(pi (p - r) / p); folding makes the row exactly even.
    let r = r.min(p_i - r) as f64;
    let s = (PI * r / p as f64).sin();
    (-(theta * theta) * s * s).exp()
}

/// Correlation at a continuous time difference `dt` (seconds) for period
/// `period` (seconds).
#[inline]
pub(crate) fn continuous_correlation(dt: f64, theta: f64, period: f64) -> f64 {
    // sin^2 has period pi, so fold the phase into [0, 1) first.
    let phase = dt / period;
    let frac = phase - phase.floor();
    let s = (PI * frac).sin();
    (-(theta * theta) * s * s).exp()
}

/// First row of `R` (length `p`), the `p x m` block `R•` and the first row of
/// the Toeplitz block `R*` (length `m`).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBlocks {
    pub circ_row: Vec<f64>,
    m: usize,
}

impl KernelBlocks {
    pub fn p(&self) -> usize {
        self.circ_row.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `R•[i][j] = circ_row[(i - j) mod p]`, `i < p`, `j < m`.
    pub fn bullet(&self, i: usize, j: usize) -> f64 {
        let p = self.p();
        self.circ_row[(i + p - j % p) % p]
    }

    /// `R•` materialized row-major (`p` rows of `m`).
    pub fn bullet_cols(&self) -> Vec<Vec<f64>> {
        (0..self.p())
            .map(|i| (0..self.m).map(|j| self.bullet(i, j)).collect())
            .collect()
    }

    /// First row of the symmetric Toeplitz block `R*`.
    pub fn star_row(&self) -> &[f64] {
        &self.circ_row[..self.m]
    }
}

/// Correlation row of `R` for the given period and roughness.
pub(crate) fn circulant_row(theta: f64, p: usize, d: usize) -> Vec<f64> {
    (0..p).map(|j| grid_correlation(j as i64, theta, p, d)).collect()
}

pub fn build_kernel_blocks(spec: &PeriodSpec, hyper: &Hyperparams) -> KernelBlocks {
    let circ_row = circulant_row(hyper.theta, spec.p, spec.d);
    // When p > n the whole signal is "remainder"; R* then needs n < p entries.
    KernelBlocks {
        circ_row,
        m: spec.m(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn correlation_examples() {
        assert_eq!(periodic_correlation(0, 3.7, 9, 2).unwrap(), 1.0);
        assert_eq!(periodic_correlation(200, 15.0, 200, 1).unwrap(), 1.0);
        assert_relative_eq!(
            periodic_correlation(100, 15.0, 200, 1).unwrap(),
            (-225.0f64).exp(),
            max_relative = 1e-12
        );
        assert!(periodic_correlation(1, f64::NAN, 4, 1).is_err());
        assert!(periodic_correlation(1, 1.0, 0, 1).is_err());
    }

    #[test]
    fn small_rows() {
        let one = build_kernel_blocks(&PeriodSpec::new(1, 1, 1.0, 5).unwrap(), &Hyperparams::new(2.0, 1.0).unwrap());
        assert_eq!(one.circ_row, vec![1.0]);

        let spec = PeriodSpec::new(4, 1, 1.0, 10).unwrap();
        let blocks = build_kernel_blocks(&spec, &Hyperparams::new(1.0, 1.0).unwrap());
        let want = [1.0, (-0.5f64).exp(), (-1.0f64).exp(), (-0.5f64).exp()];
        for (a, b) in blocks.circ_row.iter().zip(want) {
            assert_relative_eq!(*a, b, max_relative = 1e-14);
        }
        // k = 2, m = 2: R• is the first two columns of the dense 4x4 R.
        assert_eq!(blocks.m(), 2);
        let dense: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| (-(1.0f64) * (PI * (i as f64 - j as f64) / 4.0).sin().powi(2)).exp()).collect())
            .collect();
        for (i, row) in blocks.bullet_cols().iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((v - dense[i][j]).abs() < 1e-15);
            }
        }
        assert_eq!(blocks.star_row(), &blocks.circ_row[..2]);
    }

    #[test]
    fn period_spec_derivations() {
        let s = PeriodSpec::new(3, 1, 1.0, 7).unwrap();
        assert_eq!((s.k(), s.m(), s.eta()), (2, 1, 1));
        let s = PeriodSpec::new(10, 4, 2.0, 7).unwrap();
        assert_eq!((s.k(), s.m(), s.eta()), (0, 7, 1));
        assert_eq!(s.reduced(), (5, 2));
        assert_relative_eq!(s.period(), 1.25);
        assert!(PeriodSpec::new(0, 1, 1.0, 5).is_err());
    }

    #[test]
    fn continuous_matches_grid() {
        let (p, d, fs, theta) = (7usize, 3usize, 2.5, 4.0);
        let period = p as f64 / (d as f64 * fs);
        for lag in -20i64..20 {
            let a = grid_correlation(lag, theta, p, d);
            let b = continuous_correlation(lag as f64 / fs, theta, period);
            assert!((a - b).abs() < 1e-12, "lag {lag}");
        }
    }

    #[test]
    fn signal_validation() {
        assert!(Signal::new(vec![1.0], 1.0).is_err());
        assert!(Signal::new(vec![1.0, 2.0], 0.0).is_err());
        assert!(Signal::new(vec![1.0, f64::INFINITY], 1.0).is_err());
        let s = Signal::new(vec![1.0, 2.0, 3.0], 2.0).unwrap();
        assert_eq!(s.time(0), 0.5);
    }

    proptest! {
        #[test]
        fn correlation_is_periodic_and_even(lag in -500i64..500, p in 1usize..40, d in 1usize..5, theta in 0.1f64..30.0) {
            let a = periodic_correlation(lag, theta, p, d).unwrap();
            let b = periodic_correlation(lag.rem_euclid(p as i64), theta, p, d).unwrap();
            let c = periodic_correlation(-lag, theta, p, d).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!((a - c).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn circulant_row_is_symmetric(p in 1usize..40, d in 1usize..5, theta in 0.1f64..30.0) {
            let row = circulant_row(theta, p, d);
            prop_assert_eq!(row[0], 1.0);
            for j in 0..p {
                prop_assert_eq!(row[j], row[(p - j) % p]);
            }
        }
    }
}
