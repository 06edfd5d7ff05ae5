//! Holevo information between Bob's post-selected sign bit and Eve.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::entropy::entropy_of_mixture;
use super::{OperatingPoint, SecurityError};
use crate::math::gaussian_tail;

/// Maps the operating point to the coherent states Eve holds, one per
/// constellation point. Implementations are policies: swapping one changes
/// the bound without touching the entropy machinery.
pub trait AttackModel: Send + Sync {
    fn name(&self) -> &'static str;

    fn eve_amplitudes(&self, op: &OperatingPoint, constellation: &[Complex64]) -> Vec<Complex64>;
}

/// Collective beamsplitter attack. Eve replaces the line with a lossless one
/// and keeps the complementary port of a beamsplitter of transmission
/// `eta_eff = eta_tot / (1 + excess)`, so measured excess noise is charged
/// as extra loss in Eve's favour.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BeamsplitterAttack;

impl BeamsplitterAttack {
    pub fn effective_transmission(op: &OperatingPoint) -> f64 {
        op.total_transmission / (1.0 + op.excess_noise.max(0.0))
    }
}

impl AttackModel for BeamsplitterAttack {
    fn name(&self) -> &'static str {
        "beamsplitter"
    }

    fn eve_amplitudes(&self, op: &OperatingPoint, constellation: &[Complex64]) -> Vec<Complex64> {
        let leak = (1.0 - Self::effective_transmission(op))
            .clamp(0.0, 1.0)
            .sqrt();
        constellation.iter().map(|&a| a * leak).collect()
    }
}

/// Contribution of one measurement phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseHolevo {
    pub phase: f64,
    /// `P(b = +1 | accepted)`.
    pub p_plus: f64,
    /// Entropy of Eve's state over accepted slots.
    pub eve_entropy: f64,
    /// Eve's entropy conditioned on `b = +1` and `b = -1`.
    pub conditional_entropy: [f64; 2],
    pub chi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolevoBreakdown {
    /// Average over the phases, bits per accepted use.
    pub chi: f64,
    /// Largest entropy of Eve's unconditioned ensemble over the phases.
    pub eve_entropy: f64,
    pub per_phase: Vec<PhaseHolevo>,
}

/// Holevo information between Bob's accepted bit and Eve's state, averaged
/// over Bob's measurement `phases` (chosen uniformly).
///
/// Alice's symbols are equiprobable. Conditioned on symbol `i`, Bob's outcome
/// is Gaussian with mean `mu * proj_i(phi)` and standard deviation
/// `sqrt(noise_variance)`, where `proj_i` is the projection of the unit-`r`
/// symbol on the measured axis (`+-1` for QPSK on the data axes).
pub fn holevo_bound(
    op: &OperatingPoint,
    constellation: &[Complex64],
    phases: &[f64],
    attack: &dyn AttackModel,
) -> Result<HolevoBreakdown, SecurityError> {
    op.validate()?;
    if constellation.is_empty() || phases.is_empty() {
        return Err(SecurityError::InvalidOperatingPoint(
            "empty constellation or phase set".into(),
        ));
    }
    let k = constellation.len();
    if op.amplitude == 0.0 {
        let per_phase = phases
            .iter()
            .map(|&phase| PhaseHolevo {
                phase,
                p_plus: 0.5,
                eve_entropy: 0.0,
                conditional_entropy: [0.0; 2],
                chi: 0.0,
            })
            .collect();
        return Ok(HolevoBreakdown {
            chi: 0.0,
            eve_entropy: 0.0,
            per_phase,
        });
    }
    let eve = attack.eve_amplitudes(op, constellation);
    let sigma = op.noise_variance.sqrt();
    let prior = 1.0 / k as f64;

    let mut per_phase = Vec::with_capacity(phases.len());
    for &phase in phases {
        // joint[b][i] = P(i, b, accepted)
        let mut joint = [vec![0.0; k], vec![0.0; k]];
        for (i, a) in constellation.iter().enumerate() {
            let proj = (a.re * phase.cos() + a.im * phase.sin()) / op.amplitude;
            let mean = op.mu * proj;
            joint[0][i] = prior * gaussian_tail((op.threshold - mean) / sigma);
            joint[1][i] = prior * gaussian_tail((op.threshold + mean) / sigma);
        }
        let p_acc: f64 = joint.iter().flatten().sum();
        if p_acc <= 0.0 {
            return Err(SecurityError::EmptySelection);
        }
        let accepted: Vec<f64> = (0..k)
            .map(|i| (joint[0][i] + joint[1][i]) / p_acc)
            .collect();
        let eve_entropy = entropy_of_mixture(&normalize(&accepted), &eve)?;
        let mut conditional_entropy = [0.0; 2];
        let mut conditional = 0.0;
        let mut p_plus = 0.0;
        for b in 0..2 {
            let p_b: f64 = joint[b].iter().sum::<f64>() / p_acc;
            if b == 0 {
                p_plus = p_b;
            }
            if p_b <= 0.0 {
                continue;
            }
            let post: Vec<f64> = joint[b].iter().map(|x| x / (p_b * p_acc)).collect();
            let s = entropy_of_mixture(&normalize(&post), &eve)?;
            conditional_entropy[b] = s;
            conditional += p_b * s;
        }
        per_phase.push(PhaseHolevo {
            phase,
            p_plus,
            eve_entropy,
            conditional_entropy,
            chi: (eve_entropy - conditional).max(0.0),
        });
    }
    let chi = per_phase.iter().map(|p| p.chi).sum::<f64>() / per_phase.len() as f64;
    let eve_entropy = per_phase.iter().map(|p| p.eve_entropy).fold(0.0, f64::max);
    Ok(HolevoBreakdown {
        chi,
        eve_entropy,
        per_phase,
    })
}

// Removes rounding drift so the weights pass the sum-to-one check.
fn normalize(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}
