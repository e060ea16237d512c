//! Thread-pool executor for the core engines.

use arnoma_core::exec::Executor;
use rayon::prelude::*;

/// Runs work items on a private rayon pool, preserving index order.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `threads = None` uses one worker per available core.
    pub fn new(threads: Option<usize>) -> Result<Self, rayon::ThreadPoolBuildError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n.max(1));
        }
        Ok(RayonExecutor { pool: b.build()? })
    }

    /// Number of workers.
    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use arnoma_core::exec::Sequential;

    #[test]
    fn order_matches_sequential() {
        let ex = RayonExecutor::new(Some(3)).unwrap();
        let f = |i: usize| (i as f64).sqrt().sin();
        assert_eq!(ex.map(1000, f), Sequential.map(1000, f));
        assert_eq!(ex.threads(), 3);
    }
}
