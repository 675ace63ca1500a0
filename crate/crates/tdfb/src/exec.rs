//! Parallel batch execution on a rayon pool.

use rayon::prelude::*;
use rayon::ThreadPool;
use tdfb_core::trainer::BatchExecutor;

/// Environment variable capping the worker count; unset or 0 means one
/// worker per available core.
pub const THREADS_ENV: &str = "TDFB_THREADS";

pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0)
}

/// Runs jobs on a dedicated pool; results keep their index order, so
/// reductions over them do not depend on scheduling.
pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    pub fn new(threads: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        RayonExecutor { pool }
    }

    pub fn from_env() -> Self {
        Self::new(thread_count())
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl BatchExecutor for RayonExecutor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
