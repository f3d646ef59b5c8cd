//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature the work runs on a rayon pool of the requested
//! size; without it, or with one thread, items are processed in order on the
//! calling thread. Results always come back in input order.

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("falling back to sequential evaluation: {e}");
            items.iter().map(f).collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], _threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Whether this build can use more than one worker.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
