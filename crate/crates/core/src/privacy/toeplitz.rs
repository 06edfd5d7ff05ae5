//! Toeplitz-matrix universal hashing over GF(2).
//!
//! The `l x n` matrix `T[i][j] = t[i - j + n - 1]` is fixed by its
//! `n + l - 1` diagonal bits `t`, which are expanded from a seed with a
//! counter-based generator. Any window of `t` can be regenerated without
//! producing the bits before it, so input is absorbed in bounded chunks and
//! memory stays `O(chunk + l)` regardless of `n`.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use super::PrivacyError;
use crate::rng::substream;

/// Input bits processed per internal step.
const CHUNK_BITS: usize = 1 << 20;

/// Incremental Toeplitz hash of a fixed-length input.
#[derive(Debug, Clone)]
pub struct ToeplitzHasher {
    seed: u64,
    input_len: usize,
    output_len: usize,
    absorbed: usize,
    acc: Vec<u64>,
}

impl ToeplitzHasher {
    pub fn new(seed: u64, input_len: usize, output_len: usize) -> Result<Self, PrivacyError> {
        if output_len > input_len {
            return Err(PrivacyError::OutputTooLong {
                requested: output_len,
                available: input_len,
            });
        }
        Ok(Self {
            seed,
            input_len,
            output_len,
            absorbed: 0,
            acc: vec![0; output_len.div_ceil(64)],
        })
    }

    /// Feeds the next bits (one `u8` per bit) of the input.
    pub fn absorb(&mut self, bits: &[u8]) -> Result<(), PrivacyError> {
        if self.absorbed + bits.len() > self.input_len {
            return Err(PrivacyError::InputOverflow {
                expected: self.input_len,
            });
        }
        for chunk in bits.chunks(CHUNK_BITS) {
            self.absorb_chunk(chunk);
        }
        Ok(())
    }

    fn absorb_chunk(&mut self, chunk: &[u8]) {
        if self.output_len == 0 || chunk.is_empty() {
            self.absorbed += chunk.len();
            return;
        }
        let a = self.absorbed;
        let b = a + chunk.len();
        // Columns a..b use diagonal bits t[n - b ..= n - 1 - a + l - 1].
        let start = self.input_len - b;
        let window = diagonal_window(self.seed, start, chunk.len() + self.output_len - 1);
        let reversed: Vec<u8> = chunk.iter().rev().copied().collect();
        let x = crate::bits::pack_words(&reversed);
        for i in 0..self.output_len {
            if window_parity(&window, i, &x, chunk.len()) {
                self.acc[i / 64] ^= 1 << (i % 64);
            }
        }
        self.absorbed = b;
    }

    /// Returns the hash; every input bit must have been absorbed.
    pub fn finish(self) -> Result<Vec<u8>, PrivacyError> {
        if self.absorbed != self.input_len {
            return Err(PrivacyError::InputUnderflow {
                expected: self.input_len,
                got: self.absorbed,
            });
        }
        Ok((0..self.output_len)
            .map(|i| ((self.acc[i / 64] >> (i % 64)) & 1) as u8)
            .collect())
    }
}

/// Hashes `bits` to `output_len` bits with the Toeplitz matrix for `seed`.
pub fn toeplitz_hash(bits: &[u8], seed: u64, output_len: usize) -> Result<Vec<u8>, PrivacyError> {
    let mut h = ToeplitzHasher::new(seed, bits.len(), output_len)?;
    h.absorb(bits)?;
    h.finish()
}

/// Diagonal bits `t[start .. start + len]` packed into words.
fn diagonal_window(seed: u64, start: usize, len: usize) -> Vec<u64> {
    let mut rng: ChaCha8Rng = substream(seed, 0);
    let first_word = start / 32;
    rng.set_word_pos(first_word as u128);
    let skip = start % 32;
    let total = skip + len;
    let mut raw = Vec::with_capacity(total.div_ceil(64) + 1);
    for _ in 0..total.div_ceil(64) {
        let lo = rng.next_u32() as u64;
        let hi = rng.next_u32() as u64;
        raw.push(lo | (hi << 32));
    }
    let mut out = vec![0u64; len.div_ceil(64) + 1];
    for (w, slot) in out.iter_mut().enumerate() {
        *slot = extract_word(&raw, skip + w * 64);
    }
    out
}

#[inline]
fn extract_word(words: &[u64], bit: usize) -> u64 {
    let (w, s) = (bit / 64, bit % 64);
    let lo = words.get(w).copied().unwrap_or(0) >> s;
    if s == 0 {
        lo
    } else {
        lo | (words.get(w + 1).copied().unwrap_or(0) << (64 - s))
    }
}

/// Parity of `window[offset .. offset + len] & x`.
fn window_parity(window: &[u64], offset: usize, x: &[u64], len: usize) -> bool {
    let mut acc = 0u64;
    let full = len / 64;
    for (k, &xw) in x.iter().enumerate().take(full) {
        acc ^= extract_word(window, offset + k * 64) & xw;
    }
    let rem = len % 64;
    if rem > 0 {
        let mask = (1u64 << rem) - 1;
        acc ^= extract_word(window, offset + full * 64) & x[full] & mask;
    }
    acc.count_ones() & 1 == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Direct evaluation of the matrix definition, one diagonal bit at a time.
    fn naive(bits: &[u8], seed: u64, l: usize) -> Vec<u8> {
        let n = bits.len();
        let t = diagonal_window(seed, 0, n + l - 1);
        let bit = |q: usize| ((t[q / 64] >> (q % 64)) & 1) as u8;
        (0..l)
            .map(|i| (0..n).fold(0u8, |acc, j| acc ^ (bit(i + n - 1 - j) & bits[j])))
            .collect()
    }

    #[test]
    fn matches_matrix_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(n, l) in &[(1, 1), (63, 5), (64, 64), (200, 77), (517, 130)] {
            let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            assert_eq!(
                toeplitz_hash(&bits, 11, l).unwrap(),
                naive(&bits, 11, l),
                "n={n} l={l}"
            );
        }
    }

    #[test]
    fn window_generation_is_random_access() {
        let whole = diagonal_window(5, 0, 500);
        let part = diagonal_window(5, 133, 200);
        for q in 0..200 {
            let a = (whole[(133 + q) / 64] >> ((133 + q) % 64)) & 1;
            let b = (part[q / 64] >> (q % 64)) & 1;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn streamed_absorption_equals_one_shot() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bits: Vec<u8> = (0..3000).map(|_| rng.gen_range(0..2)).collect();
        let mut h = ToeplitzHasher::new(4, bits.len(), 100).unwrap();
        for piece in bits.chunks(333) {
            h.absorb(piece).unwrap();
        }
        assert_eq!(h.finish().unwrap(), toeplitz_hash(&bits, 4, 100).unwrap());
    }

    #[test]
    fn rejects_oversized_output_and_wrong_input_length() {
        assert!(toeplitz_hash(&[1, 0], 0, 3).is_err());
        let mut h = ToeplitzHasher::new(0, 4, 2).unwrap();
        h.absorb(&[1, 1]).unwrap();
        assert!(h.clone().finish().is_err());
        assert!(h.absorb(&[1, 1, 1]).is_err());
    }

    #[test]
    fn all_zero_input_hashes_to_zero() {
        assert_eq!(toeplitz_hash(&[0; 1000], 77, 64).unwrap(), vec![0; 64]);
    }
}
