use rayon::prelude::*;

use crate::error::{Error, Result};

/// Maps `f` over `0..count` on a pool of `workers` threads (0 = machine
/// parallelism) and returns the results in index order.
///
/// Errors are tagged with the index of the failing item.
pub fn map_indexed<T, F>(workers: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let tagged = |i: usize| {
        f(i).map_err(|e| Error::Replicate {
            index: i,
            source: Box::new(e),
        })
    };
    if workers == 1 {
        return (0..count).map(tagged).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Io(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(tagged).collect())
}
