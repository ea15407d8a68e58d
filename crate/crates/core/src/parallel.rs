//! Row-partitioned helpers. With the `parallel` feature rows are spread over
//! rayon workers; reductions always combine per-row partials in index order.

use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn for_each_row<F>(data: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(r, row)| f(r, row));

    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(row_len)
        .enumerate()
        .for_each(|(r, row)| f(r, row));
}

pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sums per-row partials computed independently, in row order.
pub(crate) fn row_sum<F>(n_rows: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Send + Sync,
{
    map_collect(n_rows, f).into_iter().sum()
}
