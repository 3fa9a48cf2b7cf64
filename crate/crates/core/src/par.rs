//! Deterministic data-parallel helpers.
//!
//! Reductions are split into fixed-size chunks whose partial results are
//! combined pairwise in index order, so the result does not depend on the
//! number of worker threads (or on whether the `parallel` feature is on).

use std::ops::{Add, Range};

/// Elements per reduction chunk.
pub const CHUNK: usize = 2048;

fn chunk_ranges(n: usize, chunk: usize) -> Vec<Range<usize>> {
    (0..n.div_ceil(chunk))
        .map(|c| c * chunk..((c + 1) * chunk).min(n))
        .collect()
}

/// Parallel map over `0..n`, results in index order.
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Pairwise (tree) combination of partial results in index order.
pub fn pairwise<T: Copy + Add<Output = T>>(parts: &[T], zero: T) -> T {
    match parts.len() {
        0 => zero,
        1 => parts[0],
        n => {
            let mid = n / 2;
            pairwise(&parts[..mid], zero) + pairwise(&parts[mid..], zero)
        }
    }
}

/// Reduce `0..n` by evaluating `f` on fixed chunks and combining pairwise.
pub fn reduce<T, F>(n: usize, zero: T, f: F) -> T
where
    T: Copy + Send + Add<Output = T>,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    reduce_chunked(n, CHUNK, zero, f)
}

pub fn reduce_chunked<T, F>(n: usize, chunk: usize, zero: T, f: F) -> T
where
    T: Copy + Send + Add<Output = T>,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let ranges = chunk_ranges(n, chunk.max(1));
    if ranges.len() <= 1 {
        return ranges.into_iter().map(&f).fold(zero, |a, b| a + b);
    }
    let parts = map(ranges.len(), |c| f(ranges[c].clone()));
    pairwise(&parts, zero)
}

/// Apply `f(chunk_index, chunk)` to consecutive mutable chunks of `data`.
pub fn for_each_chunk_mut<F>(data: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk.max(1))
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk.max(1))
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
}
