//! Index-ordered data-parallel mapping.
//!
//! All parallel work in the crate goes through [`map_indexed`]: each index
//! computes independently and writes its own slot, and any reduction happens
//! afterwards in index order. That makes results bit-identical regardless of
//! the worker count. With the `parallel` feature disabled the same API runs
//! sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, returning results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, returning results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential reference implementation, kept unconditionally for benchmarks.
pub fn map_indexed_serial<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
