//! Pluggable execution of independent, index-addressed tasks.
//!
//! Randomised procedures in this crate derive one generator per task index, so
//! any executor that returns results in index order yields identical output.

use alloc::vec::Vec;

/// Runs `len` independent tasks and returns their results in index order.
pub trait Executor {
    /// Evaluate `task(0..len)` and collect the results in index order.
    fn map_indexed<T, F>(&self, len: usize, task: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs tasks one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, len: usize, task: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(task).collect()
    }
}
