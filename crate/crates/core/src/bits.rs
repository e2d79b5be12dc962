//! Packed bit vectors over GF(2).

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct PackedBits {
    words: Vec<u64>,
    len: usize,
}

impl PackedBits {
    pub(crate) fn zeros(len: usize) -> Self {
        PackedBits {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub(crate) fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if bit {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        PackedBits { words, len }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub(crate) fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    /// `len` bits starting at `offset`, repacked from bit 0.
    pub(crate) fn window(&self, offset: usize, len: usize) -> PackedBits {
        let mut out = PackedBits::zeros(len);
        let shift = offset % 64;
        let base = offset / 64;
        for (w, slot) in out.words.iter_mut().enumerate() {
            let lo = self.words.get(base + w).copied().unwrap_or(0) >> shift;
            let hi = if shift == 0 {
                0
            } else {
                self.words.get(base + w + 1).copied().unwrap_or(0) << (64 - shift)
            };
            *slot = lo | hi;
        }
        out.clear_tail();
        out
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    /// Parity of the bitwise AND with `other` (the GF(2) inner product).
    pub(crate) fn dot(&self, other: &PackedBits) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    fn xor_assign(&mut self, other: &PackedBits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn lowest_set(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

/// Rank over GF(2) of the matrix whose rows are `rows`.
pub(crate) fn rank(mut rows: Vec<PackedBits>) -> usize {
    let mut rank = 0;
    let mut remaining = rows.as_mut_slice();
    while let Some((first, rest)) = remaining.split_first_mut() {
        if let Some(pivot) = first.lowest_set() {
            for row in rest.iter_mut() {
                if row.get(pivot) {
                    row.xor_assign(first);
                }
            }
            rank += 1;
        } else {
            debug_assert!(first.is_zero());
        }
        remaining = rest;
    }
    rank
}
