//! Per-sample work distribution.
//!
//! Training evaluates samples independently and then reduces their
//! gradients in index order, so the result never depends on which
//! executor produced the per-sample values.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluate `f(0..len)` and return the results in index order.
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Evaluates everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}
