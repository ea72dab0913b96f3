//! The work behind each subcommand. Every command writes its outputs and a
//! `manifest.json` into the output directory and returns a small summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cpgp_core::likelihood::{AcpgpNormalization, PreparedPeriod};
use cpgp_core::predictor::Prediction;
use cpgp_core::signals::{add_noise, noise_for, snr_db, synthesize, NoiseSpec};
use cpgp_core::{fit, Constant, FitResult, Hyperparams, PeriodMap, PredictorState, Signal};
use serde::{Deserialize, Serialize};

use crate::bench::{run_bench, write_bench_csv, BenchRow};
use crate::config::{grid_times, RunConfig};
use crate::error::{CliError, Result};
use crate::io::{
    fmt_f64, read_json, read_signal_csv, resolve_fs, write_json, write_predictions_csv, write_scan_csv,
    write_signal_csv, write_sidecar, write_text,
};
use crate::oracle_check::{run_suite, OracleReport};
use crate::parallel::ParallelMap;

/// Contents of `manifest.json`. Passing it back through `--config` reruns
/// the command.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, S> {
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub summary: &'a S,
}

fn write_manifest<S: Serialize>(cfg: &RunConfig, command: &str, summary: &S) -> Result<()> {
    write_json(
        &cfg.output("manifest.json"),
        &Manifest {
            command,
            config: cfg,
            summary,
        },
    )
}

pub fn load_input(cfg: &RunConfig) -> Result<Signal> {
    let path = cfg.input_path()?;
    let fs = resolve_fs(path, cfg.fs)?;
    read_signal_csv(path, fs)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub n: usize,
    pub fs: f64,
    pub clean: PathBuf,
    pub noisy: Option<PathBuf>,
    pub snr_db: Option<f64>,
    pub seed: u64,
    /// `10 log10(P_x / P_e)` of the arrays actually written.
    pub measured_snr_db: Option<f64>,
}

pub fn simulate(cfg: &RunConfig) -> Result<SimulateSummary> {
    let clean = synthesize(&cfg.synthetic)?;
    let clean_path = cfg.output("clean.csv");
    write_signal_csv(&clean_path, &clean)?;
    write_sidecar(&clean_path, clean.fs())?;
    let (noisy, measured) = match cfg.snr_db {
        Some(snr) if snr != f64::INFINITY => {
            let spec = NoiseSpec { snr_db: snr, seed: cfg.seed };
            let noise = noise_for(&clean, &spec)?;
            let noisy = add_noise(&clean, &spec)?;
            let path = cfg.output("noisy.csv");
            write_signal_csv(&path, &noisy)?;
            write_sidecar(&path, noisy.fs())?;
            (Some(path), Some(snr_db(clean.values(), &noise)))
        }
        _ => (None, None),
    };
    let summary = SimulateSummary {
        n: clean.len(),
        fs: clean.fs(),
        clean: clean_path,
        noisy,
        snr_db: cfg.snr_db,
        seed: cfg.seed,
        measured_snr_db: measured,
    };
    write_manifest(cfg, "simulate", &summary)?;
    Ok(summary)
}

pub fn fit_command(cfg: &RunConfig) -> Result<FitResult> {
    let signal = load_input(cfg)?;
    let exec = ParallelMap::new(cfg.workers)?;
    let result = fit(&signal, &cfg.search, &Constant, cfg.variant, &exec)?;
    write_json(&cfg.output("fit.json"), &result)?;
    write_scan_csv(&cfg.output("scan.csv"), &result.scan_trace)?;
    #[derive(Serialize)]
    struct Summary {
        period: f64,
        period_fraction: (usize, usize),
        p_hat: usize,
        theta_hat: f64,
        delta_hat: f64,
    }
    write_manifest(
        cfg,
        "fit",
        &Summary {
            period: result.period,
            period_fraction: result.period_fraction,
            p_hat: result.p_hat,
            theta_hat: result.theta_hat,
            delta_hat: result.delta_hat,
        },
    )?;
    Ok(result)
}

/// One candidate of a fixed-hyperparameter scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub p: usize,
    pub loglik: f64,
    /// Segment-only likelihood divided by `k p`.
    pub l1_normalized: f64,
}

/// Both objectives over `p = 1..=p_max` at fixed `(theta, delta)`.
pub fn scan_rows<E: PeriodMap>(signal: &Signal, hyper: &Hyperparams, d: usize, p_max: usize, exec: &E) -> Vec<ScanRow> {
    exec.map(p_max, |i| {
        let p = i + 1;
        let (loglik, l1_normalized) = match PreparedPeriod::new(signal, p, &Constant) {
            Ok(prep) => (
                prep.cpgp(hyper, d).map_or(f64::NEG_INFINITY, |e| e.loglik),
                prep.acpgp(hyper, d, AcpgpNormalization::default())
                    .map_or(f64::NEG_INFINITY, |e| e.loglik),
            ),
            Err(_) => (f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        ScanRow {
            p,
            loglik,
            l1_normalized,
        }
    })
}

/// Smallest `p` attaining the maximum of `key`, ignoring non-finite values.
pub fn argmax_by(rows: &[ScanRow], key: impl Fn(&ScanRow) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for r in rows {
        let v = key(r);
        if v.is_finite() && best.map_or(true, |(_, b)| v > b) {
            best = Some((r.p, v));
        }
    }
    best.map(|b| b.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    pub theta: f64,
    pub delta: f64,
    pub d: usize,
    pub p_max: usize,
    pub best_p: Option<usize>,
    pub best_p_l1_normalized: Option<usize>,
}

pub fn scan_command(cfg: &RunConfig) -> Result<(ScanSummary, Vec<ScanRow>)> {
    let signal = load_input(cfg)?;
    let exec = ParallelMap::new(cfg.workers)?;
    let hyper = Hyperparams::new(cfg.scan.theta, cfg.scan.delta)?;
    let d = cfg.search.d;
    let p_max = cfg.search.final_p_max();
    let rows = scan_rows(&signal, &hyper, d, p_max, &exec);
    let mut out = String::from("p,loglik,l1_normalized\n");
    for r in &rows {
        let _ = writeln!(out, "{},{},{}", r.p, fmt_f64(r.loglik), fmt_f64(r.l1_normalized));
    }
    write_text(&cfg.output("scan.csv"), &out)?;
    let summary = ScanSummary {
        theta: hyper.theta,
        delta: hyper.delta,
        d,
        p_max,
        best_p: argmax_by(&rows, |r| r.loglik),
        best_p_l1_normalized: argmax_by(&rows, |r| r.l1_normalized),
    };
    write_manifest(cfg, "scan", &summary)?;
    Ok((summary, rows))
}

/// The fields of `fit.json` that prediction needs.
#[derive(Debug, Clone, Copy, Deserialize)]
pub struct FittedModel {
    pub theta_hat: f64,
    pub delta_hat: f64,
    pub p_hat: usize,
    pub d: usize,
}

impl From<&FitResult> for FittedModel {
    fn from(r: &FitResult) -> Self {
        FittedModel {
            theta_hat: r.theta_hat,
            delta_hat: r.delta_hat,
            p_hat: r.p_hat,
            d: r.d,
        }
    }
}

pub fn predict_command(cfg: &RunConfig) -> Result<Vec<Prediction>> {
    let signal = load_input(cfg)?;
    let model = match &cfg.predict.fit {
        Some(path) => read_json::<FittedModel>(path)?,
        None => {
            let exec = ParallelMap::new(cfg.workers)?;
            FittedModel::from(&fit(&signal, &cfg.search, &Constant, cfg.variant, &exec)?)
        }
    };
    let hyper = Hyperparams::new(model.theta_hat, model.delta_hat)?;
    let state = PredictorState::new(&signal, hyper, model.p_hat, model.d, Constant)?;
    let preds = match cfg.predict.grid {
        Some(g) => state.denoise(&grid_times(g)?)?,
        None => state.denoise_training_grid()?,
    };
    write_predictions_csv(&cfg.output("predictions.csv"), &preds)?;
    #[derive(Serialize)]
    struct Summary {
        points: usize,
        theta: f64,
        delta: f64,
        p: usize,
        d: usize,
    }
    write_manifest(
        cfg,
        "predict",
        &Summary {
            points: preds.len(),
            theta: model.theta_hat,
            delta: model.delta_hat,
            p: model.p_hat,
            d: model.d,
        },
    )?;
    Ok(preds)
}

pub fn bench_command(cfg: &RunConfig) -> Result<Vec<BenchRow>> {
    let rows = run_bench(&cfg.bench, cfg.seed)?;
    write_bench_csv(&cfg.output("bench.csv"), &rows)?;
    write_manifest(cfg, "bench", &rows)?;
    Ok(rows)
}

pub fn oracle_check_command(cfg: &RunConfig) -> Result<OracleReport> {
    let report = run_suite(&cfg.oracle, cfg.seed)?;
    write_json(&cfg.output("oracle.json"), &report)?;
    write_manifest(cfg, "oracle-check", &report.passed)?;
    Ok(report)
}

/// Reads a config file, accepting either a bare [`RunConfig`] or a manifest
/// written by a previous run.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let value: serde_json::Value = read_json(path)?;
    let inner = match value {
        serde_json::Value::Object(mut map) if map.contains_key("command") && map.contains_key("config") => {
            map.remove("config").unwrap_or_default()
        }
        other => other,
    };
    serde_json::from_value(inner).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}
