//! Replication driver: data-parallel with a sequential fallback.
//!
//! Monte Carlo loops in this crate are expressed as a pure function of the
//! replication index. With the `parallel` feature (default) the loop runs on
//! the rayon pool; without it the loop runs sequentially. Results are
//! collected in replication order either way, so the two modes produce
//! bit-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluate `f(0), f(1), ..., f(reps - 1)` and collect the results in index
/// order. Runs on the rayon pool when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_reps<T, F>(reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..reps).into_par_iter().map(f).collect()
}

/// Evaluate `f(0), f(1), ..., f(reps - 1)` and collect the results in index
/// order. Sequential build: identical results, one thread.
#[cfg(not(feature = "parallel"))]
pub fn map_reps<T, F>(reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    map_reps_serial(reps, f)
}

/// Sequential replication loop, always available. Used by the benchmarks to
/// compare against the parallel path, and as the `map_reps` implementation
/// when the `parallel` feature is off.
pub fn map_reps_serial<T, F>(reps: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..reps).map(f).collect()
}
