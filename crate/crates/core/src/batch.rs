//! Data-parallel helpers for independent work items (replications, packet
//! episodes, seeds).
//!
//! With the `parallel` feature (on by default) [`map`] fans out over the
//! rayon pool; without it everything runs on the calling thread. Results
//! always come back in input order, so downstream merges are deterministic
//! either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving order.
pub fn map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_parallel(items, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_sequential(items, f)
    }
}

pub fn map_sequential<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_parallel<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Split `0..n` into contiguous chunks of at most `chunk` indices.
pub fn chunks(n: u64, chunk: u64) -> Vec<std::ops::Range<u64>> {
    let chunk = chunk.max(1);
    (0..n.div_ceil(chunk))
        .map(|i| i * chunk..((i + 1) * chunk).min(n))
        .collect()
}

/// Run `f` inside a pool limited to `jobs` threads (0 = all available).
#[cfg(feature = "parallel")]
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_jobs<R: Send>(_jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_range() {
        assert_eq!(chunks(10, 4), vec![0..4, 4..8, 8..10]);
        assert!(chunks(0, 4).is_empty());
        assert_eq!(chunks(3, 0), vec![0..1, 1..2, 2..3]);
    }

    #[test]
    fn map_preserves_order() {
        let out = map((0..1000u64).collect(), |x| x * x);
        assert_eq!(out, map_sequential((0..1000u64).collect(), |x| x * x));
    }

    #[test]
    fn with_jobs_runs_closure() {
        assert_eq!(with_jobs(2, || map(vec![1, 2, 3], |x| x + 1)), vec![2, 3, 4]);
    }
}
