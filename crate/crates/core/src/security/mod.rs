//! Post-selected key rate: acceptance, error rate, mutual information,
//! the Holevo bound on Eve's information, and the secure/abort verdict.
//!
//! The net secret information per accepted use is `beta * I_AB - chi_BE`;
//! per channel use it is scaled by the fraction of slots that are data
//! slots and by the acceptance probability.

pub mod entropy;
mod holevo;
pub mod sweep;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use entropy::{coherent_overlap, entropy_of_mixture, fock};
pub use holevo::{holevo_bound, AttackModel, BeamsplitterAttack, HolevoBreakdown, PhaseHolevo};
pub use sweep::{is_unimodal, sweep_threshold, write_sweep_csv, SweepRow};

use crate::channel::Symbol;
use crate::math::{binary_entropy, gaussian_tail};

/// Default ceiling on measured excess noise, SNU.
pub const DEFAULT_EXCESS_NOISE_CEILING: f64 = 0.01;

/// Bob's data-slot measurement phases.
pub const DATA_PHASES: [f64; 2] = [0.0, std::f64::consts::FRAC_PI_2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SecurityError {
    #[error("threshold rejects every outcome (acceptance probability 0)")]
    EmptySelection,
    #[error("invalid operating point: {0}")]
    InvalidOperatingPoint(String),
    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),
    #[error("Fock truncation at {cutoff} leaves tail mass {tail_mass:e}")]
    TruncationTail { cutoff: usize, tail_mass: f64 },
}

/// QPSK constellation `(+-r +- ri)` in symbol order.
pub fn qpsk_constellation(r: f64) -> Vec<Complex64> {
    Symbol::ALL.iter().map(|s| s.amplitude(r)).collect()
}

/// Everything the closed-form key rate depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Received quadrature mean on the measured axis, SNU.
    pub mu: f64,
    /// Post-selection threshold, SNU.
    pub threshold: f64,
    /// Total variance of a homodyne sample, SNU.
    pub noise_variance: f64,
    /// Excess noise attributed to Eve, SNU.
    pub excess_noise: f64,
    /// Channel times detector transmission.
    pub total_transmission: f64,
    /// Alice's modulation amplitude `r`.
    pub amplitude: f64,
    /// Reconciliation efficiency.
    pub beta: f64,
    /// Fraction of slots used for tomography.
    pub p_tomo: f64,
}

impl OperatingPoint {
    pub fn validate(&self) -> Result<(), SecurityError> {
        let bad = |s: &str| Err(SecurityError::InvalidOperatingPoint(s.into()));
        let finite = [
            self.mu,
            self.threshold,
            self.noise_variance,
            self.excess_noise,
            self.total_transmission,
            self.amplitude,
            self.beta,
            self.p_tomo,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return bad("non-finite field");
        }
        if self.threshold < 0.0 {
            return bad("threshold must be >= 0");
        }
        if self.noise_variance <= 0.0 {
            return bad("noise variance must be > 0");
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad("beta must be in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.p_tomo) {
            return bad("p_tomo must be in [0, 1)");
        }
        if !(self.total_transmission > 0.0 && self.total_transmission <= 1.0) {
            return bad("total transmission must be in (0, 1]");
        }
        if self.amplitude < 0.0 {
            return bad("amplitude must be >= 0");
        }
        Ok(())
    }
}

/// Probability that a data sample survives post-selection, and the bit
/// error rate among survivors:
/// `p_acc = Q((T - mu)/s) + Q((T + mu)/s)`, `e = Q((T + |mu|)/s) / p_acc`.
pub fn acceptance_and_error(
    mu: f64,
    threshold: f64,
    sigma: f64,
) -> Result<(f64, f64), SecurityError> {
    if !(sigma > 0.0) || !(threshold >= 0.0) || !mu.is_finite() {
        return Err(SecurityError::InvalidOperatingPoint(format!(
            "need sigma > 0 and T >= 0, got sigma = {sigma}, T = {threshold}"
        )));
    }
    let mu = mu.abs();
    let right = gaussian_tail((threshold - mu) / sigma);
    let wrong = gaussian_tail((threshold + mu) / sigma);
    let p_acc = right + wrong;
    if p_acc <= 0.0 {
        return Err(SecurityError::EmptySelection);
    }
    Ok((p_acc, wrong / p_acc))
}

/// `1 - h2(e)` bits per accepted use.
pub fn mutual_info_post_selected(error_rate: f64) -> f64 {
    1.0 - binary_entropy(error_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    /// Measured excess noise above the configured ceiling.
    ExcessNoise,
    /// `beta * I_AB <= chi_BE`.
    NegativeMargin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict", content = "reason")]
pub enum Verdict {
    Secure,
    Abort(AbortReason),
}

/// `(Delta I per accepted use, Delta I per slot, bits per second)`.
pub fn secret_fraction(
    beta: f64,
    i_ab: f64,
    chi_be: f64,
    p_acc: f64,
    p_tomo: f64,
    symbol_rate: f64,
) -> (f64, f64, f64) {
    let per_use = beta * i_ab - chi_be;
    let per_slot = (1.0 - p_tomo) * p_acc * per_use;
    (per_use, per_slot, per_slot * symbol_rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub operating_point: OperatingPoint,
    pub attack: String,
    pub p_acc: f64,
    pub error_rate: f64,
    pub i_ab: f64,
    pub chi_be: f64,
    pub eve_entropy: f64,
    pub delta_i_use: f64,
    pub delta_i_slot: f64,
    pub bits_per_sec: f64,
    pub symbol_rate: f64,
    pub excess_noise_ceiling: f64,
    pub verdict: Verdict,
    /// Equal to `delta_i_use`.
    pub margin: f64,
}

impl SecurityReport {
    pub fn is_secure(&self) -> bool {
        self.verdict == Verdict::Secure
    }
}

/// Closed-form evaluation of an operating point for the QPSK constellation.
pub fn evaluate(
    op: &OperatingPoint,
    attack: &dyn AttackModel,
    excess_noise_ceiling: f64,
    symbol_rate: f64,
) -> Result<SecurityReport, SecurityError> {
    op.validate()?;
    let (p_acc, error_rate) = acceptance_and_error(op.mu, op.threshold, op.noise_variance.sqrt())?;
    let i_ab = mutual_info_post_selected(error_rate);
    let holevo = holevo_bound(op, &qpsk_constellation(op.amplitude), &DATA_PHASES, attack)?;
    let (delta_i_use, delta_i_slot, bits_per_sec) =
        secret_fraction(op.beta, i_ab, holevo.chi, p_acc, op.p_tomo, symbol_rate);
    let verdict = if op.excess_noise > excess_noise_ceiling {
        Verdict::Abort(AbortReason::ExcessNoise)
    } else if delta_i_use <= 0.0 {
        Verdict::Abort(AbortReason::NegativeMargin)
    } else {
        Verdict::Secure
    };
    Ok(SecurityReport {
        operating_point: *op,
        attack: attack.name().to_string(),
        p_acc,
        error_rate,
        i_ab,
        chi_be: holevo.chi,
        eve_entropy: holevo.eve_entropy,
        delta_i_use,
        delta_i_slot,
        bits_per_sec,
        symbol_rate,
        excess_noise_ceiling,
        verdict,
        margin: delta_i_use,
    })
}
