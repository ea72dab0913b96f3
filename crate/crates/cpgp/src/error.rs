//! Error categories with stable exit codes.

use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config file contents or parameter values.
    #[error("{0}")]
    Config(String),

    /// A factorization or estimate failed.
    #[error(transparent)]
    Numerical(cpgp_core::Error),

    /// A verification command ran but its comparison failed.
    #[error("{0}")]
    CheckFailed(String),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    /// Process exit code: 2 config, 3 numerical or failed check, 4 IO.
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::CheckFailed(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::CheckFailed(_) => "check",
            CliError::Io { .. } => "io",
        }
    }

    /// `{"error": {"code", "kind", "message"}}` for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            code: i32,
            kind: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: Body<'a>,
        }
        let env = Envelope {
            error: Body {
                code: self.code(),
                kind: self.kind(),
                message: self.to_string(),
            },
        };
        serde_json::to_string(&env).unwrap_or_else(|_| String::from("{\"error\":{}}"))
    }
}

impl From<cpgp_core::Error> for CliError {
    fn from(e: cpgp_core::Error) -> Self {
        use cpgp_core::Error as E;
        match e {
            E::InvalidArgument(msg) => CliError::Config(msg),
            E::OracleCapExceeded { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_and_json() {
        let e = CliError::config("bad range");
        assert_eq!(e.code(), 2);
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"]["code"], 2);
        assert_eq!(v["error"]["kind"], "config");
        assert_eq!(v["error"]["message"], "bad range");
        let n: CliError = cpgp_core::Error::FitFailed.into();
        assert_eq!(n.code(), 3);
        let i = CliError::io(Path::new("x.csv"), "missing");
        assert_eq!(i.code(), 4);
        assert_eq!(i.to_string(), "x.csv: missing");
    }
}
