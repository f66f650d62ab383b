//! Fixed-shape pairwise reductions.
//!
//! The reduction tree depends only on the input length, never on how many
//! worker threads execute it, so sums are bit-identical across thread counts.

use std::ops::Range;

/// Ranges at or below this length are summed sequentially.
pub const LEAF: usize = 256;
/// Ranges at or above this length split their halves across rayon workers.
const PARALLEL_MIN: usize = 4096;

/// Reduce `0..len` by summing `leaf(range)` values pairwise.
///
/// Returns `zero` for an empty range.
pub fn pairwise<T, L, C>(len: usize, zero: T, leaf: &L, combine: &C) -> T
where
    T: Send,
    L: Fn(Range<usize>) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    if len == 0 {
        return zero;
    }
    split(0..len, leaf, combine)
}

fn split<T, L, C>(range: Range<usize>, leaf: &L, combine: &C) -> T
where
    T: Send,
    L: Fn(Range<usize>) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    let len = range.end - range.start;
    if len <= LEAF {
        return leaf(range);
    }
    let mid = range.start + len / 2;
    let (lo, hi) = (range.start..mid, mid..range.end);
    let (a, b) = if len >= PARALLEL_MIN {
        rayon::join(|| split(lo, leaf, combine), || split(hi, leaf, combine))
    } else {
        (split(lo, leaf, combine), split(hi, leaf, combine))
    };
    combine(a, b)
}

/// Pairwise sum of a slice of floats.
pub fn sum(values: &[f64]) -> f64 {
    pairwise(values.len(), 0.0, &|r: Range<usize>| values[r].iter().sum::<f64>(), &|a, b| a + b)
}
