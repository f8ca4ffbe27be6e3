//! Data-parallel helpers.
//!
//! With the `parallel` feature these fan out over the rayon pool; without
//! it they run the same closures in order. Reductions always combine
//! fixed-size chunks left to right, so results are bit-identical between
//! the two builds and for any thread count.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluate `f(0..n)` and collect in index order.
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// Split `0..n` into chunks of `chunk` indices.
pub fn chunks(n: usize, chunk: usize) -> Vec<Range<usize>> {
    let chunk = chunk.max(1);
    (0..n.div_ceil(chunk))
        .map(|c| c * chunk..((c + 1) * chunk).min(n))
        .collect()
}

/// Sum `f` over fixed chunks of `0..n`; chunk partials are added in order.
pub fn chunked_sum<F>(n: usize, chunk: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    let ranges = chunks(n, chunk);
    let partials = map_collect(ranges.len(), |i| f(ranges[i].clone()));
    partials.into_iter().sum()
}

/// Fill `out[i] = f(i)` for every index.
pub fn fill<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    }
}

/// Whether this build fans out over rayon.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_range() {
        let c = chunks(10, 3);
        assert_eq!(c, vec![0..3, 3..6, 6..9, 9..10]);
        assert!(chunks(0, 4).is_empty());
    }

    #[test]
    fn chunked_sum_matches_serial_fold() {
        let f = |r: Range<usize>| r.map(|i| 1.0 / (1.0 + i as f64)).sum::<f64>();
        let a = chunked_sum(10_000, 128, f);
        let b: f64 = chunks(10_000, 128).into_iter().map(f).sum();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn map_collect_preserves_order() {
        let v = map_collect(1000, |i| i * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i * i));
    }
}
