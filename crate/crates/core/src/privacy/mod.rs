//! Privacy amplification: final key length accounting and Toeplitz hashing.

mod toeplitz;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use toeplitz::{toeplitz_hash, ToeplitzHasher};

/// Default security parameter in bits, subtracted from every final key.
pub const DEFAULT_SECURITY_BITS: u64 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrivacyError {
    #[error("requested {requested} output bits from {available} input bits")]
    OutputTooLong { requested: usize, available: usize },
    #[error("more input than the declared {expected} bits")]
    InputOverflow { expected: usize },
    #[error("hash finished after {got} of {expected} input bits")]
    InputUnderflow { expected: usize, got: usize },
}

/// Inputs and result of the final length computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplificationPlan {
    /// Reconciled bits entering the hash.
    pub n_in: u64,
    /// Syndrome and verification-tag bits disclosed for those bits.
    pub leak_rec: u64,
    /// `n_in * beta * I_AB`.
    pub efficiency_budget: f64,
    /// `n_in - leak_rec`.
    pub leakage_budget: f64,
    /// `ceil(n_in * chi_BE)`.
    pub chi_budget: u64,
    pub s_sec: u64,
    pub l_out: u64,
}

/// Final key length after removing Eve's information and the security margin.
///
/// The shared information is counted both from the code efficiency
/// (`n * beta * I_AB`) and from what the syndrome actually disclosed
/// (`n - leak_rec`); the smaller figure is used.
pub fn final_key_length(
    n_acc: u64,
    beta: f64,
    i_ab: f64,
    chi_be: f64,
    leak_rec: u64,
    s_sec: u64,
) -> AmplificationPlan {
    let n = n_acc as f64;
    let efficiency_budget = n * beta * i_ab;
    let leakage_budget = n - leak_rec as f64;
    let chi_budget = (n * chi_be).ceil().max(0.0) as u64;
    let shared = efficiency_budget.min(leakage_budget);
    let raw = (shared - chi_budget as f64 - s_sec as f64).floor();
    let l_out = if raw.is_finite() && raw > 0.0 {
        (raw as u64).min(n_acc)
    } else {
        0
    };
    AmplificationPlan {
        n_in: n_acc,
        leak_rec,
        efficiency_budget,
        leakage_budget,
        chi_budget,
        s_sec,
        l_out,
    }
}

/// JSON manifest written next to a raw key file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyManifest {
    pub key_bits: u64,
    pub key_bytes: u64,
    pub plan: AmplificationPlan,
    pub hash_seed: u64,
    pub reconciled_bits: u64,
    pub sifted_bits: u64,
}
