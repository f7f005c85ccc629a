//! Data-parallel loop helpers.
//!
//! Every helper has a rayon implementation behind the `parallel` feature and
//! a plain sequential one otherwise. Work is split into fixed chunks and
//! reductions combine per-chunk partial sums in a fixed pairwise order, so
//! results do not depend on the number of threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used for pointwise loops and reductions.
pub const CHUNK: usize = 4096;

/// Apply `f(chunk_index, chunk)` to consecutive mutable chunks of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

/// Evaluate `f(i)` for `i in 0..len` and collect the results in order.
pub fn map_collect<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Sum `f(i)` over `0..len` with a deterministic chunked pairwise reduction.
pub fn sum_f64<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    let partial = map_collect(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(len);
        (lo..hi).map(&f).sum::<f64>()
    });
    pairwise_sum(&partial)
}

/// Below this length pairwise sums add sequentially.
const PAIRWISE_BASE: usize = 32;

/// Pairwise (tree) summation in a fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        n if n <= PAIRWISE_BASE => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Pairwise summation of complex values.
pub fn pairwise_sum_c(values: &[crate::C64]) -> crate::C64 {
    match values.len() {
        n if n <= PAIRWISE_BASE => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum_c(a) + pairwise_sum_c(b)
        }
    }
}

/// Complex analogue of [`sum_f64`].
pub fn sum_c64<F>(len: usize, f: F) -> crate::C64
where
    F: Fn(usize) -> crate::C64 + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    let partial = map_collect(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(len);
        (lo..hi).map(&f).sum::<crate::C64>()
    });
    pairwise_sum_c(&partial)
}
