//! Fixed-order pairwise summation.
//!
//! Data is cut into consecutive blocks of [`BLOCK`] elements. Each block is
//! summed left to right, and the block partials are combined by recursive
//! halving. The association order depends only on the input length, so a
//! parallel evaluation that computes block partials independently and then
//! calls [`combine`] produces the same bits as [`pairwise_sum`].

pub const BLOCK: usize = 1024;

/// Left-to-right sum of at most one block.
#[inline]
pub fn block_sum(xs: &[f64]) -> f64 {
    debug_assert!(xs.len() <= BLOCK);
    xs.iter().fold(0.0, |acc, &x| acc + x)
}

/// Tree reduction of block partials: `combine(p) = combine(lo) + combine(hi)`
/// with `lo` holding the first `ceil(len / 2)` partials.
pub fn combine(partials: &[f64]) -> f64 {
    match partials.len() {
        0 => 0.0,
        1 => partials[0],
        n => {
            let mid = n.div_ceil(2);
            combine(&partials[..mid]) + combine(&partials[mid..])
        }
    }
}

/// Pairwise sum of a slice; see the module docs for the exact order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    let partials: Vec<f64> = xs.chunks(BLOCK).map(block_sum).collect();
    combine(&partials)
}

/// Arithmetic mean via [`pairwise_sum`]. Returns `None` for an empty slice.
pub fn pairwise_mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(pairwise_sum(xs) / xs.len() as f64)
    }
}
