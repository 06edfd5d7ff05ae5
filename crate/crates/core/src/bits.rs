//! Bit vectors.
//!
//! Key material is carried as one `u8` per bit (0 or 1) in the protocol
//! layers; [`pack`] and [`unpack`] convert to the little-endian-within-byte
//! packing used on the wire.

/// Packs bits into bytes, bit `i` stored at `byte[i / 8] >> (i % 8)`.
pub fn pack(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

/// Inverse of [`pack`]. Returns `None` when `bytes` is too short for `len` bits.
pub fn unpack(bytes: &[u8], len: usize) -> Option<Vec<u8>> {
    if bytes.len() < len.div_ceil(8) {
        return None;
    }
    Some((0..len).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect())
}

/// Packs bits into 64-bit words, bit `i` at `word[i / 64] >> (i % 64)`.
pub fn pack_words(bits: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 64] |= ((b & 1) as u64) << (i % 64);
    }
    out
}

/// Number of positions where `a` and `b` differ.
pub fn hamming_distance(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}
