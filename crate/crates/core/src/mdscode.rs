//! The single-parity MDS code over the alphabet `{1, ..., q}`.
//!
//! A codeword is an `n`-tuple whose symbols sum to zero modulo `q`. The first
//! `n - 1` symbols are free and the last one is forced, which gives
//! `q^(n-1)` codewords at minimum Hamming distance two.
//!
//! Bits map to tuples by base conversion: the bit string is read as an
//! unsigned integer `D`, written with `n - 1` base-`q` digits (most
//! significant digit first), and each digit is shifted by one to land in
//! `1..=q`. Only the first `2^f` tuples in lexicographic order are
//! reachable from bits, where `f = floor(log2 q^(n-1))`.

use crate::bits;
use crate::error::{invalid, Result};

/// Alphabet size and tuple length of the code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MdsParams {
    q: u32,
    n: usize,
    size: u64,
}

impl MdsParams {
    /// Rejects `q == 0`, `n < 2`, and codes with more than `u64::MAX` tuples.
    pub fn new(q: u32, n: usize) -> Result<Self> {
        if q == 0 {
            return Err(invalid!("alphabet size must be at least 1"));
        }
        if n < 2 {
            return Err(invalid!("tuple length must be at least 2, got {n}"));
        }
        let size = u32::try_from(n - 1)
            .ok()
            .and_then(|e| u64::from(q).checked_pow(e))
            .ok_or_else(|| invalid!("{q}^{} codewords overflow a 64-bit count", n - 1))?;
        Ok(MdsParams { q, n, size })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of valid tuples, `q^(n-1)`.
    pub fn codebook_size(&self) -> u64 {
        self.size
    }

    /// Number of bits carried by one tuple, `floor(log2 q^(n-1))`.
    pub fn index_bits(&self) -> usize {
        bits::floor_log2(self.size)
    }
}

/// A codeword of the MDS code: `n` symbols in `1..=q` summing to 0 mod `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MdsTuple(Vec<u32>);

impl MdsTuple {
    /// Validates `symbols` against `params`.
    pub fn new(symbols: Vec<u32>, params: &MdsParams) -> Result<Self> {
        if symbols.len() != params.n {
            return Err(invalid!(
                "tuple has length {}, expected {}",
                symbols.len(),
                params.n
            ));
        }
        check_range(&symbols, params.q)?;
        let sum: u64 = symbols.iter().map(|&s| u64::from(s)).sum();
        if !sum.is_multiple_of(u64::from(params.q)) {
            return Err(invalid!("tuple {symbols:?} does not sum to 0 mod {}", params.q));
        }
        Ok(MdsTuple(symbols))
    }

    pub fn symbols(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }
}

impl std::ops::Index<usize> for MdsTuple {
    type Output = u32;

    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

fn check_range(symbols: &[u32], q: u32) -> Result<()> {
    match symbols.iter().find(|&&s| s == 0 || s > q) {
        Some(s) => Err(invalid!("symbol {s} outside 1..={q}")),
        None => Ok(()),
    }
}

/// The symbol in `1..=q` that brings `partial_sum` to 0 mod `q`.
pub fn closing_symbol(q: u32, partial_sum: u64) -> u32 {
    let r = (partial_sum % u64::from(q)) as u32;
    q - r
}

/// Extends an `(n-1)`-symbol prefix with its parity symbol.
pub fn complete_tuple(prefix: &[u32], params: &MdsParams) -> Result<MdsTuple> {
    if prefix.len() != params.n - 1 {
        return Err(invalid!(
            "prefix has length {}, expected {}",
            prefix.len(),
            params.n - 1
        ));
    }
    check_range(prefix, params.q)?;
    let sum: u64 = prefix.iter().map(|&s| u64::from(s)).sum();
    let mut symbols = prefix.to_vec();
    symbols.push(closing_symbol(params.q, sum));
    Ok(MdsTuple(symbols))
}

/// Tuple number `index` in lexicographic order of the prefix.
pub fn tuple_at(index: u64, params: &MdsParams) -> Result<MdsTuple> {
    if index >= params.size {
        return Err(invalid!(
            "tuple index {index} out of range for {} codewords",
            params.size
        ));
    }
    let q = u64::from(params.q);
    let mut prefix = vec![0u32; params.n - 1];
    let mut rest = index;
    // big-endian digits: prefix[0] is the most significant
    for slot in prefix.iter_mut().rev() {
        *slot = (rest % q) as u32 + 1;
        rest /= q;
    }
    complete_tuple(&prefix, params)
}

/// Position of `tuple` in lexicographic order, read from its first `n-1`
/// symbols.
pub fn tuple_index(tuple: &MdsTuple, params: &MdsParams) -> u64 {
    let q = u64::from(params.q);
    tuple.0[..params.n - 1]
        .iter()
        .fold(0u64, |acc, &s| acc * q + u64::from(s - 1))
}

/// Iterates all `q^(n-1)` tuples in lexicographic order of the prefix.
pub fn codewords(params: &MdsParams) -> impl Iterator<Item = MdsTuple> + '_ {
    (0..params.size).map(move |i| tuple_at(i, params).expect("index in range"))
}

/// Collects all `q^(n-1)` tuples in lexicographic order of the prefix.
pub fn enumerate_codewords(params: &MdsParams) -> Vec<MdsTuple> {
    codewords(params).collect()
}

/// Maps `floor(log2 q^(n-1))` bits (MSB first) to a tuple.
pub fn bits_to_tuple(input: &[bool], params: &MdsParams) -> Result<MdsTuple> {
    let width = params.index_bits();
    if input.len() != width {
        return Err(invalid!(
            "expected {width} index bits, got {}",
            input.len()
        ));
    }
    tuple_at(bits::to_u64(input), params)
}

/// Inverse of [`bits_to_tuple`].
///
/// Tuples outside the reachable set (index `D >= 2^f`) demap to the `f`
/// low-order bits of `D`.
pub fn tuple_to_bits(tuple: &MdsTuple, params: &MdsParams) -> Result<Vec<bool>> {
    if tuple.len() != params.n {
        return Err(invalid!(
            "tuple has length {}, expected {}",
            tuple.len(),
            params.n
        ));
    }
    let tuple = MdsTuple::new(tuple.0.clone(), params)?;
    let width = params.index_bits();
    Ok(bits::from_u64(tuple_index(&tuple, params), width))
}
