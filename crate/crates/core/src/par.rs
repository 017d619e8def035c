//! Execution-mode helpers for the data-parallel element loops.
//!
//! Results are collected in index order and reduced sequentially, so parallel
//! and sequential execution produce bit-identical sums.

/// How element-level work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// Plain sequential loop.
    Sequential,
    /// Rayon work-stealing when the `parallel` feature is enabled; falls back
    /// to sequential otherwise.
    #[default]
    Parallel,
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_collect<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..n).map(f).collect(),
        ExecMode::Parallel => map_parallel(n, f),
    }
}

#[cfg(feature = "parallel")]
fn map_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
