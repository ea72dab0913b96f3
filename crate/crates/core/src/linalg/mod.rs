//! Exact structured linear algebra: symmetric circulant matrices through their
//! DFT diagonalization and symmetric Toeplitz matrices through a Schur
//! (generator) Cholesky factorization.

mod circulant;
mod toeplitz;

pub use circulant::{circulant_eigenvalues, SymmetricCirculant, EIGEN_CLAMP};
pub use toeplitz::{dense_cholesky, SymmetricToeplitz, ToeplitzFactor, DENSE_FALLBACK_MAX};
