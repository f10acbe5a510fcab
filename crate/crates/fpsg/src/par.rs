//! Data-parallel helpers with a sequential fallback.
//!
//! Within one sweep stage all cells are independent, Monte Carlo episodes
//! are independent, and candidate certifications are independent; those are
//! the only three parallel loops in the crate. With the `parallel` feature
//! (on by default) they run on rayon; without it the same code runs on
//! plain iterators. Results are collected in index order either way, so both
//! modes produce bit-identical output.

use crate::error::Error;

#[cfg(feature = "parallel")]
pub(crate) fn try_map_indexed<T, F>(n: usize, f: F) -> Result<Vec<T>, Error>
where
    T: Send,
    F: Fn(usize) -> Result<T, Error> + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn try_map_indexed<T, F>(n: usize, f: F) -> Result<Vec<T>, Error>
where
    T: Send,
    F: Fn(usize) -> Result<T, Error> + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Bound the worker pool for all parallel loops. Returns false when the
/// crate was built without the `parallel` feature (the request is then a
/// no-op: everything already runs sequentially).
pub fn set_parallelism(jobs: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
        true
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        false
    }
}
