//! Pairwise (cascade) summation.
//!
//! Rounding error grows like O(log n) rather than O(n), and the reduction
//! order depends only on the input length, so results are reproducible.

use crate::real::Real;

const BLOCK: usize = 16;

pub fn pairwise_sum<T: Real>(values: &[T]) -> T {
    if values.len() <= BLOCK {
        return values.iter().fold(T::zero(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(i)` for `i in 0..n` without materialising the terms.
pub fn pairwise_sum_by<T: Real>(n: usize, f: &impl Fn(usize) -> T) -> T {
    fn go<T: Real>(lo: usize, hi: usize, f: &impl Fn(usize) -> T) -> T {
        if hi - lo <= BLOCK {
            return (lo..hi).fold(T::zero(), |acc, i| acc + f(i));
        }
        let mid = lo + (hi - lo) / 2;
        go(lo, mid, f) + go(mid, hi, f)
    }
    go(0, n, f)
}
