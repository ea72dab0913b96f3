use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A row passed as a symmetric circulant has a spectrum with a
    /// non-negligible imaginary part.
    #[error("circulant row is not symmetric: imaginary residual {residual:e}")]
    NotSymmetric { residual: f64 },

    #[error("singular matrix: eigenvalue {eigenvalue:e}")]
    Singular { eigenvalue: f64 },

    #[error("matrix is not positive definite: pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// The conditional remainder covariance failed to factor.
    #[error("remainder covariance not positive definite (theta={theta}, delta={delta}, p={p})")]
    RemainderNotPositiveDefinite { theta: f64, delta: f64, p: usize },

    #[error("regression basis is rank deficient")]
    RankDeficientBasis,

    #[error("numerical failure (theta={theta}, delta={delta}, p={p}): {what}")]
    Numerical {
        theta: f64,
        delta: f64,
        p: usize,
        what: &'static str,
    },

    #[error("dense oracle refuses n={n} (cap {cap})")]
    OracleCapExceeded { n: usize, cap: usize },

    #[error("no grid candidate produced a finite objective")]
    InitializationFailed,

    #[error("period scan produced no finite likelihood")]
    FitFailed,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
