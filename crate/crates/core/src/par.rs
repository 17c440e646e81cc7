//! Run-level data parallelism.
//!
//! With the `parallel` feature (default) independent runs are spread over a
//! rayon pool; without it everything runs on the calling thread. Results are
//! always returned in index order, so output does not depend on scheduling.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses the given number of worker threads, or rayon's default when `None`.
    /// Falls back to sequential execution when built without `parallel`.
    #[default]
    Parallel,
}

/// Maps `f` over `0..n`, preserving index order.
pub fn map_indexed<T, F>(n: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        Execution::Sequential => (0..n).map(f).collect(),
        Execution::Parallel => parallel_map(n, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Runs `op` inside a pool of `workers` threads (`None`: all logical CPUs).
#[cfg(feature = "parallel")]
pub fn with_workers<T: Send>(workers: Option<usize>, op: impl FnOnce() -> T + Send) -> T {
    match workers {
        None => op(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(op),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<T: Send>(_workers: Option<usize>, op: impl FnOnce() -> T + Send) -> T {
    op()
}

/// Logical processors available to the process.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
