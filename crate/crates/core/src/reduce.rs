//! Fixed-shape tree reductions.
//!
//! The split points depend only on the input length, never on the number of
//! worker threads, so a parallel reduction returns bit-identical results
//! whether it runs on one thread or many.

use std::ops::Range;

/// Ranges at or below this length are folded sequentially.
pub const LEAF: usize = 1024;

/// Reduce `0..len` by splitting at the midpoint down to `LEAF`-sized ranges.
/// `leaf` folds one contiguous range; `combine` merges two halves (left, right).
pub fn tree_reduce<T, L, C>(len: usize, identity: T, leaf: &L, combine: &C) -> T
where
    T: Send + Copy,
    L: Fn(Range<usize>) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    if len == 0 {
        return identity;
    }
    reduce_range(0..len, leaf, combine)
}

fn reduce_range<T, L, C>(r: Range<usize>, leaf: &L, combine: &C) -> T
where
    T: Send + Copy,
    L: Fn(Range<usize>) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    if r.len() <= LEAF {
        return leaf(r);
    }
    let mid = r.start + r.len() / 2;
    let (a, b) = rayon::join(
        || reduce_range(r.start..mid, leaf, combine),
        || reduce_range(mid..r.end, leaf, combine),
    );
    combine(a, b)
}

pub fn tree_sum(values: &[f64]) -> f64 {
    tree_reduce(
        values.len(),
        0.0,
        &|r: Range<usize>| values[r].iter().sum::<f64>(),
        &|a, b| a + b,
    )
}

/// Tree sum of `f(i)` for `i` in `0..len`.
pub fn tree_sum_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    tree_reduce(
        len,
        0.0,
        &|r: Range<usize>| r.map(&f).sum::<f64>(),
        &|a, b| a + b,
    )
}
