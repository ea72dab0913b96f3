//! Run configuration shared by every command.
//!
//! A config file is the JSON form of [`RunConfig`]; missing fields take their
//! defaults and command-line flags override whatever the file says. Each
//! command writes the resolved config to `manifest.json`, which is enough to
//! rerun it.

use std::path::{Path, PathBuf};

use cpgp_core::signals::SyntheticSpec;
use cpgp_core::{SearchConfig, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    /// Sampling frequency of `input`; falls back to the sidecar file.
    pub fs: Option<f64>,
    pub output_dir: PathBuf,
    /// Worker threads for period scans; `None` uses every core.
    pub workers: Option<usize>,
    pub seed: u64,
    pub variant: Variant,
    pub search: SearchConfig,
    pub synthetic: SyntheticSpec,
    /// Noise level of `simulate`; `None` writes the clean signal only.
    pub snr_db: Option<f64>,
    pub scan: ScanSettings,
    pub predict: PredictSettings,
    pub bench: BenchSettings,
    pub oracle: OracleSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            fs: None,
            output_dir: PathBuf::from("."),
            workers: None,
            seed: 0,
            variant: Variant::Cpgp,
            search: SearchConfig::default(),
            synthetic: SyntheticSpec::default(),
            snr_db: Some(-18.0),
            scan: ScanSettings::default(),
            predict: PredictSettings::default(),
            bench: BenchSettings::default(),
            oracle: OracleSettings::default(),
        }
    }
}

/// Fixed hyperparameters of the `scan` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSettings {
    pub theta: f64,
    pub delta: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings { theta: 15.0, delta: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictSettings {
    /// A `fit.json` to condition on; without it `predict` fits first.
    pub fit: Option<PathBuf>,
    /// `(start, stop, step)` in seconds, inclusive of `stop`; the training
    /// grid when absent.
    pub grid: Option<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSettings {
    pub n: Vec<usize>,
    pub p: Vec<usize>,
    pub repetitions: usize,
    pub warmup: usize,
    pub theta: f64,
    pub delta: f64,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings {
            n: vec![10_000, 100_000],
            p: vec![100, 101],
            repetitions: 20,
            warmup: 3,
            theta: 15.0,
            delta: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSettings {
    /// Random likelihood and identity instances.
    pub instances: usize,
    /// Random prediction instances, each queried at five times.
    pub blup_instances: usize,
    /// Random layout draws for the block decomposition check.
    pub layout_draws: usize,
    /// Perturbs the oracle's kernel; every suite should then fail.
    pub corrupt_kernel: bool,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            instances: 200,
            blup_instances: 100,
            layout_draws: 50,
            corrupt_kernel: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.search.validate()?;
        self.synthetic.validate()?;
        if let Some(fs) = self.fs {
            if !(fs.is_finite() && fs > 0.0) {
                return Err(CliError::config("fs must be positive and finite"));
            }
        }
        if self.workers == Some(0) {
            return Err(CliError::config("workers must be at least 1"));
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return Err(CliError::config("snr_db must be a number"));
            }
        }
        Ok(())
    }

    pub fn input_path(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::config("this command needs --input"))
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

/// `lo:hi` into a pair.
pub fn parse_range(text: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got {text:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound in {text:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound in {text:?}"))?;
    Ok((lo, hi))
}

/// `start:stop:step` into a triple.
pub fn parse_grid(text: &str) -> std::result::Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:step, got {text:?}"));
    }
    let mut out = [0.0; 3];
    for (o, s) in out.iter_mut().zip(&parts) {
        *o = s.trim().parse().map_err(|_| format!("bad number {s:?} in {text:?}"))?;
    }
    Ok((out[0], out[1], out[2]))
}

/// Times `start, start + step, ...` up to `stop` inclusive.
pub fn grid_times((start, stop, step): (f64, f64, f64)) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0 && stop >= start) {
        return Err(CliError::config("prediction grid needs finite start <= stop and step > 0"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}
