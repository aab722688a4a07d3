//! Fixed-length pixel bit strings.
//!
//! Pixel `i` (0-based) lives in word `i / 64`, bit `i % 64`. Written out as
//! little-endian bytes this is exactly the frame-file packing: pixel `i` at
//! byte `i / 8`, bit `i % 8`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PixelBits {
    len: usize,
    words: Vec<u64>,
}

impl PixelBits {
    pub fn zeros(len: usize) -> Self {
        PixelBits {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Self::zeros(len);
        for i in 0..len {
            b.set(i, true);
        }
        b
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut b = Self::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            b.set(i, v);
        }
        b
    }

    /// Builds from a `0`/`1` slice, pixel 0 first.
    pub fn from_digits(bits: &[u8]) -> Self {
        let bools: Vec<bool> = bits.iter().map(|&d| d != 0).collect();
        Self::from_bools(&bools)
    }

    /// Decodes an index in which pixel 0 is the most significant bit.
    pub fn from_msb_index(index: u64, len: usize) -> Self {
        assert!(len <= 64, "index form limited to 64 pixels");
        let mut b = Self::zeros(len);
        for i in 0..len {
            b.set(i, (index >> (len - 1 - i)) & 1 == 1);
        }
        b
    }

    /// Index with pixel 0 as the most significant bit.
    pub fn msb_index(&self) -> u64 {
        assert!(self.len <= 64, "index form limited to 64 pixels");
        (0..self.len).fold(0u64, |acc, i| (acc << 1) | self.get(i) as u64)
    }

    pub(crate) fn from_words(len: usize, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), len.div_ceil(64));
        PixelBits { len, words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "pixel {i} out of range {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "pixel {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Applies a pixel permutation: output pixel `perm[i]` takes input pixel `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.len);
        let mut out = Self::zeros(self.len);
        for (i, &p) in perm.iter().enumerate() {
            out.set(p, self.get(i));
        }
        out
    }

    pub(crate) fn check_len(&self, expected: usize) -> Result<()> {
        if self.len != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: self.len,
            });
        }
        Ok(())
    }
}

impl fmt::Debug for PixelBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PixelBits(")?;
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

/// A frame outcome: bit `i` is 1 when pixel `i` clicked.
pub type OutcomeString = PixelBits;

/// Detector activation chosen by the adversary: bit `i` is 1 when pixel `i`
/// is active.
pub type StatusConfig = PixelBits;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_index_round_trip() {
        for idx in 0..64u64 {
            let b = PixelBits::from_msb_index(idx, 6);
            assert_eq!(b.msb_index(), idx);
        }
        let b = PixelBits::from_digits(&[1, 0, 0]);
        assert_eq!(b.msb_index(), 4);
    }

    #[test]
    fn weight_across_words() {
        let mut b = PixelBits::zeros(200);
        for i in (0..200).step_by(3) {
            b.set(i, true);
        }
        assert_eq!(b.weight(), 67);
        assert_eq!(PixelBits::ones(130).weight(), 130);
    }
}
