//! Thread-pool executor for the core crate's index-addressed tasks.

use diftrans_core::Executor;
use rayon::prelude::*;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DIFTRANS_THREADS";

pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    pub fn new(threads: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().expect("thread pool");
        Self { pool }
    }

    /// All available cores, or fewer when `DIFTRANS_THREADS` says so.
    pub fn from_env() -> anyhow::Result<Self> {
        let available = std::thread::available_parallelism().map_or(1, |n| n.get());
        let threads = match std::env::var(THREADS_ENV) {
            Ok(v) => {
                let cap: usize = v.trim().parse().map_err(|_| anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
                anyhow::ensure!(cap > 0, "{THREADS_ENV} must be a positive integer, got {v:?}");
                cap.min(available)
            }
            Err(_) => available,
        };
        Ok(Self::new(threads))
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map_indexed<T, F>(&self, len: usize, task: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..len).into_par_iter().map(task).collect())
    }
}
