//! Data-parallel helpers with a serial fallback.
//!
//! Every hot loop in the crate (mode sums in the equations of motion, contour
//! nodes of the Laplace inversion, Monte Carlo batches) goes through these
//! helpers. Without the `parallel` feature, [`Exec::Parallel`] silently runs
//! serially; results are identical either way up to floating-point
//! summation order inside a reduction.

use serde::{Deserialize, Serialize};
use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Serial,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Split `0..n` into contiguous ranges of at most `chunk` elements.
pub fn chunks(n: usize, chunk: usize) -> Vec<Range<usize>> {
    let chunk = chunk.max(1);
    (0..n.div_ceil(chunk)).map(|c| c * chunk..((c + 1) * chunk).min(n)).collect()
}

/// `f(i)` for `i in 0..n`, collected in index order.
pub fn map_range<R, F>(exec: Exec, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Map over a slice, preserving order.
pub fn map_slice<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Chunked map-reduce over `0..n`. Chunk boundaries do not depend on the
/// execution policy, so serial and parallel runs perform the same partial sums.
pub fn fold_chunks<R, F, G>(exec: Exec, n: usize, chunk: usize, identity: R, fold: F, reduce: G) -> R
where
    R: Send + Sync + Clone,
    F: Fn(Range<usize>) -> R + Sync + Send,
    G: Fn(R, R) -> R + Sync + Send,
{
    let parts = map_slice(exec, &chunks(n, chunk), |r| fold(r.clone()));
    parts.into_iter().fold(identity, reduce)
}

/// Apply `f(offset, chunk)` to disjoint mutable chunks of `out`.
pub fn for_each_chunk_mut<T, F>(exec: Exec, out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_chunks_mut(chunk).enumerate().for_each(|(c, s)| f(c * chunk, s));
        return;
    }
    let _ = exec;
    for (c, s) in out.chunks_mut(chunk).enumerate() {
        f(c * chunk, s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_range() {
        let c = chunks(10, 4);
        assert_eq!(c, vec![0..4, 4..8, 8..10]);
        assert!(chunks(0, 4).is_empty());
    }

    #[test]
    fn serial_and_parallel_agree() {
        let f = |r: Range<usize>| r.map(|i| (i as f64).sqrt()).sum::<f64>();
        let a = fold_chunks(Exec::Serial, 1000, 64, 0.0, f, |x, y| x + y);
        let b = fold_chunks(Exec::Parallel, 1000, 64, 0.0, f, |x, y| x + y);
        assert_eq!(a, b);
        let mut v = vec![0usize; 37];
        for_each_chunk_mut(Exec::Parallel, &mut v, 5, |off, s| {
            for (j, x) in s.iter_mut().enumerate() {
                *x = off + j;
            }
        });
        assert_eq!(v, (0..37).collect::<Vec<_>>());
    }
}
