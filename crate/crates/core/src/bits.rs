//! Helpers for converting between bit vectors and integers.
//!
//! Bits are stored most-significant first.

/// Interprets `bits` as an unsigned integer, MSB first.
pub fn to_u64(bits: &[bool]) -> u64 {
    debug_assert!(bits.len() <= 64);
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
}

/// Writes the `width` low-order bits of `value`, MSB first.
pub fn from_u64(value: u64, width: usize) -> Vec<bool> {
    debug_assert!(width <= 64);
    (0..width).rev().map(|i| (value >> i) & 1 == 1).collect()
}

/// Number of positions where `a` and `b` differ.
pub fn hamming(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// `floor(log2(x))` for `x >= 1`.
pub(crate) fn floor_log2(x: u64) -> usize {
    debug_assert!(x >= 1);
    63 - x.leading_zeros() as usize
}

/// `log2(m)` when `m` is a power of two.
pub(crate) fn exact_log2(m: u32) -> Option<usize> {
    m.is_power_of_two().then(|| m.trailing_zeros() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_first() {
        assert_eq!(to_u64(&[false, true, true]), 3);
        assert_eq!(from_u64(3, 3), vec![false, true, true]);
        assert_eq!(from_u64(0, 0), Vec::<bool>::new());
    }

    #[test]
    fn logs() {
        assert_eq!(floor_log2(1), 0);
        assert_eq!(floor_log2(9), 3);
        assert_eq!(floor_log2(216), 7);
        assert_eq!(exact_log2(8), Some(3));
        assert_eq!(exact_log2(6), None);
    }
}
