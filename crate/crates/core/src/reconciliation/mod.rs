//! Reverse reconciliation over the binary symmetric channel induced by
//! sign quantization.
//!
//! Bob, holding the reference string, discloses its syndrome under an LDPC
//! code together with a short universal-hash tag. Alice runs belief
//! propagation from her own string towards the coset named by the syndrome
//! and keeps the block only when her result reproduces Bob's tag.

pub mod alist;
mod bench;
mod code;
mod decoder;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bench::{benchmark, BenchParams, BenchSummary};
pub use code::{
    build_code, build_code_with_checks, checks_for_rate, DegreeProfile, ParityCheckMatrix,
};
pub use decoder::{DecodeOutcome, SumProductDecoder};

use crate::math::binary_entropy;
use crate::privacy::toeplitz_hash;

/// Smallest block length accepted by [`build_code`].
pub const MIN_BLOCK_LEN: usize = 1000;
/// Verification tag length in bits.
pub const TAG_BITS: usize = 40;
/// Default block length.
pub const DEFAULT_BLOCK_LEN: usize = 100_000;
/// Default design rate.
pub const DEFAULT_RATE: f64 = 0.51;
/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconciliationError {
    #[error("block length {0} is below the minimum of {MIN_BLOCK_LEN}")]
    BlockTooShort(usize),
    #[error("infeasible degree profile: {0}")]
    InfeasibleProfile(String),
    #[error("invalid parity-check matrix: {0}")]
    InvalidMatrix(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("crossover probability {0} outside (0, 0.5)")]
    InvalidCrossover(f64),
}

/// `s = H x` over GF(2).
pub fn compute_syndrome(
    bits: &[u8],
    h: &ParityCheckMatrix,
) -> Result<Vec<u8>, ReconciliationError> {
    if bits.len() != h.n() {
        return Err(ReconciliationError::LengthMismatch {
            expected: h.n(),
            got: bits.len(),
        });
    }
    Ok(h.rows()
        .iter()
        .map(|row| row.iter().fold(0u8, |acc, &v| acc ^ (bits[v as usize] & 1)))
        .collect())
}

/// 40-bit tag of `bits` under the Toeplitz family indexed by `seed`.
pub fn verification_tag(bits: &[u8], seed: u64) -> u64 {
    let tag = toeplitz_hash(bits, seed, TAG_BITS.min(bits.len())).expect("tag shorter than block");
    tag.iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
}

/// Result of reconciling one block on Alice's side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconciliationResult {
    pub corrected: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
    /// Syndrome bits disclosed (the check count `m`).
    pub syndrome_bits: usize,
    /// Syndrome plus tag bits disclosed.
    pub leaked_bits: usize,
    pub tag_match: bool,
    pub corrections: usize,
}

impl ReconciliationResult {
    /// Converged and verified: the block is kept.
    pub fn accepted(&self) -> bool {
        self.converged && self.tag_match
    }
}

/// Decodes Alice's block against Bob's syndrome and checks Bob's tag.
pub fn decode(
    decoder: &SumProductDecoder,
    alice_bits: &[u8],
    syndrome: &[u8],
    crossover: f64,
    max_iter: usize,
    bob_tag: u64,
    tag_seed: u64,
) -> Result<ReconciliationResult, ReconciliationError> {
    if !(crossover > 0.0 && crossover < 0.5) {
        return Err(ReconciliationError::InvalidCrossover(crossover));
    }
    let out = decoder.decode(alice_bits, syndrome, crossover, max_iter);
    let tag_match = out.converged && verification_tag(&out.bits, tag_seed) == bob_tag;
    Ok(ReconciliationResult {
        converged: out.converged,
        iterations: out.iterations,
        syndrome_bits: syndrome.len(),
        leaked_bits: syndrome.len() + TAG_BITS,
        tag_match,
        corrections: out.corrections,
        corrected: out.bits,
    })
}

/// Reconciliation efficiency `R / (1 - h2(e))`.
pub fn measured_efficiency(rate: f64, error_rate: f64) -> f64 {
    rate / (1.0 - binary_entropy(error_rate))
}

/// Design rate that realizes efficiency `beta` at error rate `e`.
pub fn rate_for_efficiency(beta: f64, error_rate: f64) -> f64 {
    beta * (1.0 - binary_entropy(error_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(n: usize, rng: &mut impl Rng) -> Vec<u8> {
        (0..n).map(|_| rng.gen_range(0..2)).collect()
    }

    fn flip(bits: &[u8], p: f64, rng: &mut impl Rng) -> Vec<u8> {
        bits.iter()
            .map(|&b| b ^ (rng.gen::<f64>() < p) as u8)
            .collect()
    }

    #[test]
    fn syndrome_basics() {
        let h = build_code(2000, 0.5, 3).unwrap();
        assert!(compute_syndrome(&vec![0; 2000], &h)
            .unwrap()
            .iter()
            .all(|&s| s == 0));
        let mut e = vec![0u8; 2000];
        e[17] = 1;
        assert_eq!(compute_syndrome(&e, &h).unwrap(), h.column(17));
        assert!(matches!(
            compute_syndrome(&[0; 10], &h),
            Err(ReconciliationError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn codeword_has_zero_syndrome() {
        // H = [[1 1 0 1], [0 1 1 1]]; 1101 -> (1+1+1, 1+0+1) = (1, 0), 1110 -> (0, 0)
        let h = ParityCheckMatrix::from_rows(4, vec![vec![0, 1, 3], vec![1, 2, 3]], 0).unwrap();
        assert_eq!(compute_syndrome(&[1, 1, 1, 0], &h).unwrap(), vec![0, 0]);
        assert_eq!(compute_syndrome(&[1, 1, 0, 1], &h).unwrap(), vec![1, 0]);
    }

    #[test]
    fn identical_strings_need_no_correction() {
        let h = build_code(2000, 0.51, 1).unwrap();
        let dec = SumProductDecoder::new(&h);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bob = random_bits(2000, &mut rng);
        let s = compute_syndrome(&bob, &h).unwrap();
        let tag = verification_tag(&bob, 99);
        let r = decode(&dec, &bob, &s, 0.07, 200, tag, 99).unwrap();
        assert!(r.accepted());
        assert!(r.iterations <= 2);
        assert_eq!(r.corrections, 0);
        assert_eq!(r.leaked_bits, h.m() + TAG_BITS);
    }

    #[test]
    fn corrects_moderate_noise() {
        let h = build_code(4000, 0.51, 2).unwrap();
        let dec = SumProductDecoder::new(&h);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bob = random_bits(4000, &mut rng);
        let alice = flip(&bob, 0.03, &mut rng);
        let s = compute_syndrome(&bob, &h).unwrap();
        let r = decode(&dec, &alice, &s, 0.03, 200, verification_tag(&bob, 5), 5).unwrap();
        assert!(r.accepted());
        assert_eq!(r.corrected, bob);
    }

    #[test]
    fn beyond_capacity_fails_to_converge() {
        let h = build_code(2000, 0.51, 4).unwrap();
        let dec = SumProductDecoder::new(&h);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let bob = random_bits(2000, &mut rng);
            let alice = flip(&bob, 0.4, &mut rng);
            let s = compute_syndrome(&bob, &h).unwrap();
            let r = decode(&dec, &alice, &s, 0.4, 50, verification_tag(&bob, 1), 1).unwrap();
            assert!(!r.accepted());
        }
    }

    #[test]
    fn rejects_invalid_crossover() {
        let h = build_code(1000, 0.5, 0).unwrap();
        let dec = SumProductDecoder::new(&h);
        let bits = vec![0; 1000];
        let s = vec![0; h.m()];
        assert!(decode(&dec, &bits, &s, 0.5, 10, 0, 0).is_err());
        assert!(decode(&dec, &bits, &s, 0.0, 10, 0, 0).is_err());
    }

    #[test]
    fn efficiency_closed_form() {
        let e: f64 = 0.07;
        let cap = 1.0 - binary_entropy(e);
        assert!((measured_efficiency(cap, e) - 1.0).abs() < 1e-12);
        // 1 - h2(0.07) = 0.6340763
        assert!((measured_efficiency(0.51, 0.07) - 0.804_319_5).abs() < 1e-5);
        assert!((measured_efficiency(0.5, 0.07) - 0.788_548_6).abs() < 1e-5);
    }
}
