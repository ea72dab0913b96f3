//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpgp_core::Variant;
use serde::Serialize;

use crate::commands::{
    bench_command, fit_command, load_config, oracle_check_command, predict_command, scan_command, simulate,
};
use crate::config::{parse_grid, parse_range, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "cpgp", version, about = "Period estimation and denoising with circulant periodic Gaussian processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic transient train and a noisy copy.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Noise level in dB, or `none` for the clean signal only.
        #[arg(long)]
        snr: Option<String>,
        /// Transient period in seconds.
        #[arg(long)]
        t0: Option<f64>,
        /// Record length in seconds.
        #[arg(long)]
        length: Option<f64>,
        /// Sampling frequency of the synthetic signal in Hz.
        #[arg(long = "sim-fs")]
        sim_fs: Option<f64>,
    },
    /// Estimate the period and hyperparameters of a signal.
    Fit {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the likelihood over every candidate period at fixed hyperparameters.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Fixed roughness.
        #[arg(long)]
        theta: Option<f64>,
        /// Fixed noise-to-signal ratio.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Denoise a signal or predict it at new times.
    Predict {
        #[command(flatten)]
        common: Common,
        /// `fit.json` from a previous fit; fits first when absent.
        #[arg(long)]
        fit: Option<PathBuf>,
        /// Prediction times `start:stop:step` in seconds; the sample times when absent.
        #[arg(long, value_parser = parse_grid)]
        grid: Option<(f64, f64, f64)>,
    },
    /// Time single likelihood evaluations over signal lengths and periods.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Signal lengths, comma separated.
        #[arg(long = "n", value_delimiter = ',')]
        n: Vec<usize>,
        /// Periods in samples, comma separated.
        #[arg(long = "p", value_delimiter = ',')]
        p: Vec<usize>,
        /// Timed evaluations per cell; the median is reported.
        #[arg(long)]
        repetitions: Option<usize>,
        /// Untimed evaluations before timing.
        #[arg(long)]
        warmup: Option<usize>,
    },
    /// Compare the fast computations with the dense reference model.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Random instances for the likelihood and identity comparisons.
        #[arg(long)]
        instances: Option<usize>,
        /// Random instances for the prediction comparison.
        #[arg(long)]
        blup_instances: Option<usize>,
        /// Perturb the reference kernel; the check is then expected to fail.
        #[arg(long)]
        corrupt_kernel: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Cpgp,
    Acpgp,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Cpgp => Variant::Cpgp,
            VariantArg::Acpgp => Variant::Acpgp,
        }
    }
}

/// Flags shared by every command; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration or a manifest from a previous run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Signal CSV, one value per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Sampling frequency in Hz; read from `<input>.json` when absent.
    #[arg(long)]
    pub fs: Option<f64>,
    /// Largest candidate period in samples at unit resolution.
    #[arg(long)]
    pub pmax: Option<usize>,
    /// Period resolution of the final scan.
    #[arg(long)]
    pub d: Option<usize>,
    /// Period resolution while tuning hyperparameters.
    #[arg(long)]
    pub dstar: Option<usize>,
    /// Search range `lo:hi` for the roughness.
    #[arg(long, value_parser = parse_range)]
    pub theta_range: Option<(f64, f64)>,
    /// Search range `lo:hi` for the noise-to-signal ratio.
    #[arg(long, value_parser = parse_range)]
    pub delta_range: Option<(f64, f64)>,
    /// Objective: full likelihood or the segment-only approximation.
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Seed for noise and randomized checks.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Threads for period scans; all cores when absent.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Directory for output files and the manifest.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

impl Common {
    /// Config file (or defaults) with these flags applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.input {
            cfg.input = Some(v.clone());
        }
        if let Some(v) = self.fs {
            cfg.fs = Some(v);
        }
        if let Some(v) = self.pmax {
            cfg.search.p_max = v;
        }
        if let Some(v) = self.d {
            cfg.search.d = v;
        }
        if let Some(v) = self.dstar {
            cfg.search.d_star = v;
        }
        if let Some(v) = self.theta_range {
            cfg.search.theta_range = v;
        }
        if let Some(v) = self.delta_range {
            cfg.search.delta_range = v;
        }
        if let Some(v) = self.variant {
            cfg.variant = v.into();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = Some(v);
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        Ok(cfg)
    }
}

fn parse_snr(text: &str) -> Result<Option<f64>> {
    match text.trim().to_ascii_lowercase().as_str() {
        "none" | "inf" | "+inf" => Ok(None),
        s => s
            .parse()
            .map(Some)
            .map_err(|_| CliError::config(format!("--snr expects a number or `none`, got {text:?}"))),
    }
}

/// Final configuration of a parsed command line.
pub fn configure(command: &Command) -> Result<RunConfig> {
    let cfg = match command {
        Command::Simulate {
            common,
            snr,
            t0,
            length,
            sim_fs,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(s) = snr {
                cfg.snr_db = parse_snr(s)?;
            }
            if let Some(v) = t0 {
                cfg.synthetic.t0 = *v;
            }
            if let Some(v) = length {
                cfg.synthetic.length = *v;
            }
            if let Some(v) = sim_fs {
                cfg.synthetic.fs = *v;
            }
            cfg
        }
        Command::Fit { common } => common.resolve()?,
        Command::Scan { common, theta, delta } => {
            let mut cfg = common.resolve()?;
            if let Some(v) = theta {
                cfg.scan.theta = *v;
            }
            if let Some(v) = delta {
                cfg.scan.delta = *v;
            }
            cfg
        }
        Command::Predict { common, fit, grid } => {
            let mut cfg = common.resolve()?;
            if let Some(v) = fit {
                cfg.predict.fit = Some(v.clone());
            }
            if let Some(v) = grid {
                cfg.predict.grid = Some(*v);
            }
            cfg
        }
        Command::Bench {
            common,
            n,
            p,
            repetitions,
            warmup,
        } => {
            let mut cfg = common.resolve()?;
            if !n.is_empty() {
                cfg.bench.n = n.clone();
            }
            if !p.is_empty() {
                cfg.bench.p = p.clone();
            }
            if let Some(v) = repetitions {
                cfg.bench.repetitions = *v;
            }
            if let Some(v) = warmup {
                cfg.bench.warmup = *v;
            }
            cfg
        }
        Command::OracleCheck {
            common,
            instances,
            blup_instances,
            corrupt_kernel,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(v) = instances {
                cfg.oracle.instances = *v;
            }
            if let Some(v) = blup_instances {
                cfg.oracle.blup_instances = *v;
            }
            if *corrupt_kernel {
                cfg.oracle.corrupt_kernel = true;
            }
            cfg
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn to_line<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| CliError::config(e.to_string()))
}

/// Runs a parsed command and returns the JSON line for stdout.
pub fn execute(command: &Command) -> Result<String> {
    let cfg = configure(command)?;
    match command {
        Command::Simulate { .. } => to_line(&simulate(&cfg)?),
        Command::Fit { .. } => {
            let r = fit_command(&cfg)?;
            #[derive(Serialize)]
            struct Line {
                period: f64,
                period_fraction: (usize, usize),
                p_hat: usize,
                theta_hat: f64,
                delta_hat: f64,
                loglik: f64,
            }
            to_line(&Line {
                period: r.period,
                period_fraction: r.period_fraction,
                p_hat: r.p_hat,
                theta_hat: r.theta_hat,
                delta_hat: r.delta_hat,
                loglik: r.loglik,
            })
        }
        Command::Scan { .. } => to_line(&scan_command(&cfg)?.0),
        Command::Predict { .. } => {
            let preds = predict_command(&cfg)?;
            to_line(&serde_json::json!({ "points": preds.len() }))
        }
        Command::Bench { .. } => to_line(&bench_command(&cfg)?),
        Command::OracleCheck { .. } => {
            let report = oracle_check_command(&cfg)?;
            let line = to_line(&report)?;
            if report.passed {
                Ok(line)
            } else {
                println!("{line}");
                Err(CliError::CheckFailed(String::from("oracle check found discrepancies")))
            }
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Results go to stdout as one JSON line; failures go to stderr as
/// `{"error": {...}}`.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                eprintln!("{}", CliError::config(e.to_string().trim_end()).to_json());
                return 2;
            }
            print!("{e}");
            return 0;
        }
    };
    match execute(&cli.command) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("cpgp").chain(args.iter().copied()))
            .unwrap()
            .command
    }

    #[test]
    fn flags_override_defaults() {
        let cmd = parse(&[
            "fit",
            "--input",
            "x.csv",
            "--fs",
            "2",
            "--pmax",
            "40",
            "--d",
            "5",
            "--dstar",
            "1",
            "--theta-range",
            "2:8",
            "--delta-range",
            "0.5:4",
            "--variant",
            "acpgp",
            "--seed",
            "7",
            "--workers",
            "2",
            "--output-dir",
            "out",
        ]);
        let cfg = configure(&cmd).unwrap();
        assert_eq!(cfg.fs, Some(2.0));
        assert_eq!((cfg.search.p_max, cfg.search.d, cfg.search.d_star), (40, 5, 1));
        assert_eq!(cfg.search.theta_range, (2.0, 8.0));
        assert_eq!(cfg.search.delta_range, (0.5, 4.0));
        assert_eq!(cfg.variant, Variant::Acpgp);
        assert_eq!((cfg.seed, cfg.workers), (7, Some(2)));
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let cmd = parse(&["fit", "--dstar", "3", "--d", "2"]);
        assert_eq!(configure(&cmd).unwrap_err().code(), 2);
        assert!(Cli::try_parse_from(["cpgp", "fit", "--theta-range", "5"]).is_err());
        assert_eq!(run(["cpgp", "fit", "--variant", "tpgp"]), 2);
        assert_eq!(run(["cpgp", "simulate", "--snr", "loud"]), 2);
    }

    #[test]
    fn snr_parsing() {
        assert_eq!(parse_snr("none").unwrap(), None);
        assert_eq!(parse_snr("-18").unwrap(), Some(-18.0));
        assert!(parse_snr("x").is_err());
    }
}
