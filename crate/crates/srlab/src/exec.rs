use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use srlab_core::Executor;

/// Rayon-backed [`Executor`]. Results come back in index order, so outputs
/// match [`srlab_core::Sequential`] bit for bit.
pub struct RayonExecutor {
    pool: Option<ThreadPool>,
}

impl RayonExecutor {
    /// `None` uses the global pool; `Some(n)` a dedicated pool of `n` workers.
    pub fn new(workers: Option<usize>) -> Self {
        let pool =
            workers.map(|n| ThreadPoolBuilder::new().num_threads(n.max(1)).build().expect("thread pool construction"));
        Self { pool }
    }

    pub fn workers(&self) -> usize {
        self.pool.as_ref().map_or_else(rayon::current_num_threads, ThreadPool::current_num_threads)
    }
}

impl Default for RayonExecutor {
    fn default() -> Self {
        Self::new(None)
    }
}

impl Executor for RayonExecutor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let run = || (0..n).into_par_iter().map(&f).collect();
        match &self.pool {
            Some(p) => p.install(run),
            None => run(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use srlab_core::Sequential;

    #[test]
    fn order_matches_sequential() {
        let f = |i: usize| (i * i) as u64 ^ 0x55;
        for w in [1, 3, 8] {
            assert_eq!(RayonExecutor::new(Some(w)).map(1000, f), Sequential.map(1000, f));
        }
    }
}
