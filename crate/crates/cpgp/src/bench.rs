//! Timing of single likelihood evaluations over an `(n, p)` grid.

use std::fmt::Write as _;
use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

use cpgp_core::signals::{add_noise, synthesize, NoiseSpec, SyntheticSpec};
use cpgp_core::{profile_loglik, Constant, Signal};
use serde::Serialize;

use crate::config::BenchSettings;
use crate::error::{CliError, Result};
use crate::io::{fmt_f64, write_text};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub p: usize,
    pub median_seconds: f64,
    pub repetitions: usize,
}

/// Transient train plus white noise at 0 dB, `n` samples at 1 Hz.
pub fn bench_signal(n: usize, seed: u64) -> Result<Signal> {
    let clean = synthesize(&SyntheticSpec::default().with_length(n as f64))?;
    Ok(add_noise(&clean, &NoiseSpec { snr_db: 0.0, seed })?)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median wall time of one `profile_loglik` call, segmentation included.
pub fn time_loglik(signal: &Signal, p: usize, theta: f64, delta: f64, repetitions: usize, warmup: usize) -> Result<f64> {
    if repetitions == 0 {
        return Err(CliError::config("bench needs at least one repetition"));
    }
    for _ in 0..warmup {
        black_box(profile_loglik(signal, theta, delta, p, 1, &Constant)?);
    }
    let mut times = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        black_box(profile_loglik(black_box(signal), theta, delta, p, 1, &Constant)?);
        times.push(start.elapsed().as_secs_f64());
    }
    Ok(median(times))
}

pub fn run_bench(settings: &BenchSettings, seed: u64) -> Result<Vec<BenchRow>> {
    if settings.n.is_empty() || settings.p.is_empty() {
        return Err(CliError::config("bench needs at least one n and one p"));
    }
    let mut rows = Vec::new();
    for &n in &settings.n {
        let signal = bench_signal(n, seed)?;
        for &p in &settings.p {
            let median_seconds = time_loglik(&signal, p, settings.theta, settings.delta, settings.repetitions, settings.warmup)?;
            rows.push(BenchRow {
                n,
                p,
                median_seconds,
                repetitions: settings.repetitions,
            });
        }
    }
    Ok(rows)
}

pub fn write_bench_csv(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let mut out = String::from("n,p,median_eval_seconds\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.n, r.p, fmt_f64(r.median_seconds));
    }
    write_text(path, &out)
}
