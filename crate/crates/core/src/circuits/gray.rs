//! Reflected Gray ordering of nonempty subsets.

/// Masks `g(i) = i ^ (i >> 1)` for `i = 1..2^k`; consecutive masks differ in one bit.
pub fn gray_masks(k: usize) -> Vec<u64> {
    assert!(k < 64, "gray order limited to 63 bits");
    (1..(1u64 << k)).map(|i| i ^ (i >> 1)).collect()
}

/// Nonempty subsets of `0..k` in reflected Gray order.
pub fn gray_sequence(k: usize) -> Vec<Vec<usize>> {
    gray_masks(k)
        .into_iter()
        .map(|m| (0..k).filter(|&j| m >> j & 1 == 1).collect())
        .collect()
}

/// Position of `mask` in the reflected Gray order (inverse Gray code).
pub fn gray_rank(mask: u64) -> u64 {
    let mut r = mask;
    let mut shift = 1;
    while shift < 64 {
        r ^= r >> shift;
        shift <<= 1;
    }
    r
}
