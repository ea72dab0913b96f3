#![no_std]
//! Exact, scalable Gaussian-process modelling of periodic signals sampled on a
//! regular time grid.
//!
//! A signal of length `n` is split into `k = n / p` whole segments of `p`
//! samples plus an `m = n - k p` sample remainder. Under the periodic kernel
//! the segment covariance is a block matrix of one symmetric circulant block,
//! so the joint log-likelihood of the segments only needs FFTs of length `p`.
//! The remainder, conditioned on the segments, has a symmetric Toeplitz
//! covariance handled with an `O(m^2)` Schur factorization. Nothing is
//! approximated: [`likelihood::profile_loglik`] agrees with the dense
//! `O(n^3)` model in [`oracle`] to rounding error.
//!
//! The crate only needs `alloc`. IO, threading and the command-line front end
//! live in the companion `cpgp` crate.
//!
//! # Modules
//! - [`kernel`]: periodic correlation on grid lags and the `R`, `R•`, `R*` blocks.
//! - [`linalg`]: symmetric circulant and Toeplitz algebra.
//! - [`likelihood`]: segmentation, sufficient statistics, profile likelihood.
//! - [`estimator`]: period scan, grid initialization and pattern search.
//! - [`predictor`]: best linear unbiased prediction and its variance.
//! - [`oracle`]: dense brute-force reference model.
//! - [`signals`]: periodic-transient synthesis and noise injection.

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod basis;
pub mod error;
pub mod estimator;
pub mod fft;
pub mod kernel;
pub mod likelihood;
pub mod linalg;
pub mod oracle;
pub mod predictor;
pub mod search;
pub mod signals;
mod small;

pub use basis::{Basis, Constant, Polynomial};
pub use error::{Error, Result};
pub use estimator::{fit, FitResult, PeriodMap, SearchConfig, Sequential, Variant};
pub use kernel::{periodic_correlation, Hyperparams, KernelBlocks, PeriodSpec, Signal};
pub use likelihood::{acpgp_loglik, profile_loglik, LikelihoodEval};
pub use predictor::PredictorState;
