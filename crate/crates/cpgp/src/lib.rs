//! File formats, parallel period scans, benchmarks and the command-line front
//! end for [`cpgp_core`].
//!
//! - [`io`]: signal CSV files, `fs` sidecars and result writers.
//! - [`parallel`]: a rayon-backed [`cpgp_core::PeriodMap`].
//! - [`config`]: the JSON run configuration.
//! - [`commands`]: `simulate`, `fit`, `scan`, `predict`, `bench`, `oracle-check`.
//! - [`oracle_check`]: randomized comparisons with the dense model.
//! - [`bench`]: likelihood timing.
//! - [`cli`]: argument parsing and exit codes (0 ok, 2 config, 3 numerical, 4 IO).

pub mod bench;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod oracle_check;
pub mod parallel;

pub use config::RunConfig;
pub use error::{CliError, Result};
pub use parallel::ParallelMap;
