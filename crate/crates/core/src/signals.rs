//! Synthetic periodic transients and seeded white-noise injection.
//!
//! The test signal is a train of damped sinusoids, one every `T0` seconds:
//!
//! ```text
//! x(t) = sum_{j=0}^{floor(l / T0)} exp(-zeta 2 pi omega (t - j T0)^2 / sqrt(1 - zeta^2))
//!                                  * sin(2 pi omega (t - j T0))
//! ```
//!
//! sampled at `t_i = i / fs`, `i = 1..n` with `n = round(l fs)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kernel::Signal;

/// Envelope values below this are dropped from the sum.
const ENVELOPE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SyntheticSpec {
    /// Damping ratio, `0 < zeta < 1`.
    pub zeta: f64,
    /// Natural frequency in Hz.
    pub omega: f64,
    /// Transient period in seconds; `fs * t0` need not be an integer.
    pub t0: f64,
    /// Record length in seconds.
    pub length: f64,
    /// Sampling frequency in Hz.
    pub fs: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            zeta: 0.01,
            omega: 0.055,
            t0: 200.0,
            length: 4000.0,
            fs: 1.0,
        }
    }
}

impl SyntheticSpec {
    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::invalid("zeta must lie in (0, 1)"));
        }
        for (name, v) in [("omega", self.omega), ("t0", self.t0), ("length", self.length), ("fs", self.fs)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(alloc::format!("{name} must be positive and finite")));
            }
        }
        Ok(())
    }

    /// Number of samples `round(length fs)`.
    pub fn samples(&self) -> usize {
        (self.length * self.fs).round() as usize
    }

    fn decay(&self) -> f64 {
        self.zeta * 2.0 * PI * self.omega / (1.0 - self.zeta * self.zeta).sqrt()
    }

    /// Half-width around each onset outside which the envelope is below
    /// the floor.
    fn support(&self) -> f64 {
        (-ENVELOPE_FLOOR.ln() / self.decay()).sqrt()
    }

    /// `x(t)` evaluated directly.
    pub fn value(&self, t: f64) -> f64 {
        let c = self.decay();
        let w = 2.0 * PI * self.omega;
        let last = (self.length / self.t0).floor() as i64;
        let half = self.support();
        let lo = (((t - half) / self.t0).ceil() as i64).max(0);
        let hi = (((t + half) / self.t0).floor() as i64).min(last);
        let mut sum = 0.0;
        for j in lo..=hi {
            let s = t - j as f64 * self.t0;
            sum += (-c * s * s).exp() * (w * s).sin();
        }
        sum
    }
}

pub fn synthesize(spec: &SyntheticSpec) -> Result<Signal> {
    spec.validate()?;
    let n = spec.samples();
    let values: Vec<f64> = (1..=n).map(|i| spec.value(i as f64 / spec.fs)).collect();
    Signal::new(values, spec.fs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseSpec {
    /// Signal-to-noise ratio in dB; `+inf` adds no noise.
    pub snr_db: f64,
    pub seed: u64,
}

/// Mean square of a sequence.
pub fn power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// `10 log10(P_x / P_e)`.
pub fn snr_db(clean: &[f64], noise: &[f64]) -> f64 {
    10.0 * (power(clean) / power(noise)).log10()
}

/// The noise sequence that [`add_noise`] would add.
pub fn noise_for(x: &Signal, noise: &NoiseSpec) -> Result<Vec<f64>> {
    let n = x.len();
    if noise.snr_db == f64::INFINITY {
        return Ok(alloc::vec![0.0; n]);
    }
    if noise.snr_db.is_nan() || noise.snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid("SNR must be a number or +inf"));
    }
    let px = power(x.values());
    if !(px > 0.0) {
        return Err(Error::invalid("cannot set an SNR on a zero-power signal"));
    }
    let sd = (px * 10f64.powf(-noise.snr_db / 10.0)).sqrt();
    let dist = Normal::new(0.0, sd).map_err(|_| Error::invalid("noise standard deviation out of range"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

/// `x + e`, with `e` i.i.d. Gaussian of variance `P_x 10^(-snr/10)`.
pub fn add_noise(x: &Signal, noise: &NoiseSpec) -> Result<Signal> {
    let e = noise_for(x, noise)?;
    let values = x.values().iter().zip(&e).map(|(a, b)| a + b).collect();
    Signal::new(values, x.fs())
}
