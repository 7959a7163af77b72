//! Replicate fan-out.
//!
//! With the `parallel` feature (default) replicates run on a rayon pool; without
//! it they run in a plain loop. Results are always returned in replicate order,
//! so any reduction over them is independent of the pool size.

/// Environment variable selecting the worker-pool size.
pub const THREADS_ENV: &str = "SELFCONF_THREADS";

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Evaluates `job(0..count)` one replicate after another.
pub fn map_replicates_sequential<T, F>(count: usize, job: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(job).collect()
}

/// Evaluates `job(0..count)` on a pool of `threads` workers (`None`: rayon's
/// default, i.e. available parallelism).
#[cfg(feature = "parallel")]
pub fn map_replicates_parallel<T, F>(count: usize, threads: Option<usize>, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    match builder.build() {
        Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&job).collect()),
        // fall back to the caller's thread
        Err(_) => map_replicates_sequential(count, job),
    }
}

/// Evaluates `job(0..count)` using the parallel path when compiled in.
pub fn map_replicates<T, F>(count: usize, threads: Option<usize>, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_replicates_parallel(count, threads, job)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        map_replicates_sequential(count, job)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let out = map_replicates(100, Some(3), |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn pool_size_does_not_change_results() {
        let job = |i: usize| crate::rng::derive_seed(9, i as u64);
        assert_eq!(map_replicates(50, Some(1), job), map_replicates(50, Some(4), job));
        assert_eq!(map_replicates(50, None, job), map_replicates_sequential(50, job));
    }
}
