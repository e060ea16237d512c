//! Pluggable execution of independent, indexed work items.

use alloc::vec::Vec;

/// Runs `f(0), ..., f(n - 1)` and returns the results in index order.
///
/// Implementations may evaluate items concurrently but must preserve order,
/// so any reduction done afterwards is deterministic.
pub trait Executor: Sync {
    /// Maps `f` over `0..n`.
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
