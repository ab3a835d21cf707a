//! Data-parallel trial execution with a sequential fallback.
//!
//! With the default `parallel` feature, trials run on rayon; without it the
//! same API runs sequentially. Results are always collected in ascending
//! trial order and every trial derives its own random stream, so output is
//! byte-identical across thread counts and across the two backends.

/// Maps `f` over trial indices `0..trials`, preserving order.
#[cfg(feature = "parallel")]
pub fn par_map_trials<T: Send>(trials: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..trials).into_par_iter().map(f).collect()
}

/// Maps `f` over trial indices `0..trials`, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn par_map_trials<T: Send>(trials: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..trials).map(f).collect()
}

/// Runs `f` on a pool with the given number of worker threads (`None` keeps
/// the global default). Without the `parallel` feature the thread count is
/// ignored.
#[cfg(feature = "parallel")]
pub fn run_with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        None => f(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .expect("failed to build thread pool")
            .install(f),
    }
}

/// Runs `f` on a pool with the given number of worker threads (`None` keeps
/// the global default). Without the `parallel` feature the thread count is
/// ignored.
#[cfg(not(feature = "parallel"))]
pub fn run_with_threads<T: Send>(_threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    f()
}
