//! Signal CSV files, JSON sidecars and result writers.
//!
//! A signal file holds one value per line with an optional `value` header.
//! The sampling frequency travels separately, either as a flag or as a
//! sidecar `<stem>.json` containing `{"fs": <Hz>}`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cpgp_core::estimator::ScanPoint;
use cpgp_core::predictor::Prediction;
use cpgp_core::Signal;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Formats with 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        String::from("nan")
    } else if v > 0.0 {
        String::from("inf")
    } else {
        String::from("-inf")
    }
}

/// Parses the value column of a signal file.
pub fn parse_values(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let field = line.trim();
        if field.is_empty() || (idx == 0 && field.eq_ignore_ascii_case("value")) {
            continue;
        }
        let v: f64 = field
            .parse()
            .map_err(|_| CliError::io(path, format!("line {}: cannot parse {field:?} as a number", idx + 1)))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::io(path, "no samples"));
    }
    Ok(values)
}

pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_values(&text, path)
}

pub fn read_signal_csv(path: &Path, fs: f64) -> Result<Signal> {
    Ok(Signal::new(read_values(path)?, fs)?)
}

pub fn write_signal_csv(path: &Path, signal: &Signal) -> Result<()> {
    let mut out = String::with_capacity(24 * signal.len() + 6);
    out.push_str("value\n");
    for &v in signal.values() {
        out.push_str(&fmt_f64(v));
        out.push('\n');
    }
    write_text(path, &out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub fs: f64,
}

pub fn sidecar_path(signal_path: &Path) -> PathBuf {
    signal_path.with_extension("json")
}

pub fn write_sidecar(signal_path: &Path, fs: f64) -> Result<()> {
    write_json(&sidecar_path(signal_path), &Sidecar { fs })
}

/// `fs` from the flag if given, otherwise from the sidecar.
pub fn resolve_fs(signal_path: &Path, flag: Option<f64>) -> Result<f64> {
    if let Some(fs) = flag {
        return Ok(fs);
    }
    let side = sidecar_path(signal_path);
    if !side.exists() {
        return Err(CliError::config(format!(
            "no sampling frequency: pass --fs or provide {}",
            side.display()
        )));
    }
    let sc: Sidecar = read_json(&side)?;
    Ok(sc.fs)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    write_text(path, &(text + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Two-column `p,loglik` file of a period scan.
pub fn write_scan_csv(path: &Path, scan: &[ScanPoint]) -> Result<()> {
    let mut out = String::from("p,loglik\n");
    for s in scan {
        let _ = writeln!(out, "{},{}", s.p, fmt_f64(s.loglik));
    }
    write_text(path, &out)
}

pub fn write_predictions_csv(path: &Path, preds: &[Prediction]) -> Result<()> {
    let mut out = String::from("t,y_hat,variance\n");
    for p in preds {
        let _ = writeln!(out, "{},{},{}", fmt_f64(p.t), fmt_f64(p.mean), fmt_f64(p.variance));
    }
    write_text(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_blank_lines_are_skipped() {
        let p = Path::new("mem.csv");
        assert_eq!(parse_values("value\n1.5\n\n-2\n", p).unwrap(), vec![1.5, -2.0]);
        assert_eq!(parse_values("1.5\n-2", p).unwrap(), vec![1.5, -2.0]);
        assert!(parse_values("value\n", p).is_err());
    }

    #[test]
    fn bad_line_is_located() {
        let text = "1\n2\n3\n4\n5\n6\nabc\n8\n";
        let err = parse_values(text, Path::new("s.csv")).unwrap_err();
        assert_eq!(err.code(), 4);
        assert!(err.to_string().contains("line 7"), "{err}");
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, f64::MAX] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }
}
