use mltqnn_core::Executor;
use rayon::prelude::*;

/// Evaluates samples on the rayon pool. Results come back in index order,
/// so reductions downstream are identical to [`mltqnn_core::Sequential`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl Executor for Parallel {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).into_par_iter().map(f).collect()
    }
}
