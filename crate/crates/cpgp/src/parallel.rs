//! Period scans on a rayon pool.

use cpgp_core::PeriodMap;
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Evaluates period candidates on a dedicated thread pool. Results come back
/// in index order, so scans are identical to the sequential ones.
pub struct ParallelMap {
    pool: rayon::ThreadPool,
}

impl ParallelMap {
    /// `workers = None` uses one thread per core.
    pub fn new(workers: Option<usize>) -> Result<Self> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(w) = workers {
            if w == 0 {
                return Err(CliError::config("--workers must be at least 1"));
            }
            builder = builder.num_threads(w);
        }
        let pool = builder
            .build()
            .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
        Ok(ParallelMap { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl PeriodMap for ParallelMap {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..len).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cpgp_core::Sequential;

    #[test]
    fn matches_sequential_order() {
        let par = ParallelMap::new(Some(3)).unwrap();
        assert_eq!(par.workers(), 3);
        let f = |i: usize| i * i + 1;
        assert_eq!(par.map(100, f), Sequential.map(100, f));
        assert!(par.map(0, f).is_empty());
        assert_eq!(ParallelMap::new(Some(0)).err().map(|e| e.code()), Some(2));
    }
}
