//! Monte-Carlo homodyne physical layer.
//!
//! Quadratures are in shot-noise units (SNU): the vacuum quadrature has
//! variance 1 and a coherent state `|alpha>` has mean `2 Re(alpha)` on the
//! `x` quadrature and `2 Im(alpha)` on `p`. A slot's sample is a Gaussian
//! draw with mean `2 sqrt(eta) (Re(alpha) cos(phi) + Im(alpha) sin(phi))`
//! and variance `1 + excess_noise + electronic_noise`.

mod csv;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::csv::{read_records_csv, write_records_csv, RecordRow};
use crate::rng::substream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid channel parameter: {0}")]
    InvalidParams(String),
    #[error("symbol index {0} outside 1..=4")]
    InvalidSymbol(u8),
    #[error("modulation amplitude must be finite and non-negative, got {0}")]
    InvalidAmplitude(f64),
    #[error("{symbols} symbols but {settings} measurement settings")]
    LengthMismatch { symbols: usize, settings: usize },
    #[error("data slots are measured at 0 or pi/2 only")]
    DataPhase,
    #[error("csv: {0}")]
    Csv(String),
}

/// Linear power transmission for a loss in dB.
pub fn transmission_from_db(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Physical parameters of the fiber and the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Fiber power transmission.
    pub eta_channel: f64,
    /// Overall detection efficiency.
    pub eta_detector: f64,
    /// Excess noise referred to the detector, SNU of variance.
    pub excess_noise: f64,
    /// Electronic noise, SNU of variance.
    pub electronic_noise: f64,
    /// Constant error of the phase reference, radians. Zero is an ideal
    /// local-oscillator lock.
    #[serde(default)]
    pub phase_offset: f64,
}

impl ChannelParams {
    pub fn new(
        eta_channel: f64,
        eta_detector: f64,
        excess_noise: f64,
        electronic_noise: f64,
    ) -> Result<Self, ChannelError> {
        let p = Self {
            eta_channel,
            eta_detector,
            excess_noise,
            electronic_noise,
            phase_offset: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Vacuum input, unit transmission, no added noise.
    pub fn ideal() -> Self {
        Self {
            eta_channel: 1.0,
            eta_detector: 1.0,
            excess_noise: 0.0,
            electronic_noise: 0.0,
            phase_offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |s: String| Err(ChannelError::InvalidParams(s));
        if !(self.eta_channel > 0.0 && self.eta_channel <= 1.0) {
            return bad(format!("eta_channel = {} not in (0, 1]", self.eta_channel));
        }
        if !(self.eta_detector > 0.0 && self.eta_detector <= 1.0) {
            return bad(format!(
                "eta_detector = {} not in (0, 1]",
                self.eta_detector
            ));
        }
        if !(self.excess_noise >= 0.0 && self.excess_noise.is_finite()) {
            return bad(format!("excess_noise = {} must be >= 0", self.excess_noise));
        }
        if !(self.electronic_noise >= 0.0 && self.electronic_noise.is_finite()) {
            return bad(format!(
                "electronic_noise = {} must be >= 0",
                self.electronic_noise
            ));
        }
        if !self.phase_offset.is_finite() {
            return bad("phase_offset must be finite".into());
        }
        Ok(())
    }

    /// `eta_channel * eta_detector`.
    pub fn total_transmission(&self) -> f64 {
        self.eta_channel * self.eta_detector
    }

    /// Variance of every homodyne sample, `1 + excess + electronic`.
    pub fn noise_variance(&self) -> f64 {
        1.0 + self.excess_noise + self.electronic_noise
    }
}

/// Alice's amplitude `r` giving a received quadrature mean of `sqrt(snr)`.
pub fn amplitude_for_snr(snr: f64, total_transmission: f64) -> f64 {
    snr.sqrt() / (2.0 * total_transmission.sqrt())
}

/// One of the four QPSK symbols, indexed 1..=4 as
/// `r + ri`, `r - ri`, `-r + ri`, `-r - ri`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Symbol(u8);

impl Symbol {
    pub const ALL: [Symbol; 4] = [Symbol(1), Symbol(2), Symbol(3), Symbol(4)];

    pub fn new(index: u8) -> Result<Self, ChannelError> {
        if (1..=4).contains(&index) {
            Ok(Self(index))
        } else {
            Err(ChannelError::InvalidSymbol(index))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// Signs of the real and imaginary parts.
    pub fn signs(self) -> (f64, f64) {
        match self.0 {
            1 => (1.0, 1.0),
            2 => (1.0, -1.0),
            3 => (-1.0, 1.0),
            _ => (-1.0, -1.0),
        }
    }

    pub fn amplitude(self, r: f64) -> Complex64 {
        let (re, im) = self.signs();
        Complex64::new(re * r, im * r)
    }

    /// The symbol with both signs flipped.
    pub fn antipodal(self) -> Symbol {
        Symbol(5 - self.0)
    }

    /// Uniform draw.
    pub fn random(rng: &mut impl Rng) -> Self {
        Symbol(rng.gen_range(1..=4))
    }
}

impl TryFrom<u8> for Symbol {
    type Error = ChannelError;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Symbol::new(v)
    }
}

impl From<Symbol> for u8 {
    fn from(s: Symbol) -> u8 {
        s.0
    }
}

/// Coherent amplitude for symbol `index` (1..=4) at modulation `r`.
pub fn modulate_symbol(index: u8, r: f64) -> Result<Complex64, ChannelError> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(ChannelError::InvalidAmplitude(r));
    }
    Ok(Symbol::new(index)?.amplitude(r))
}

/// Mean `(x, p)` quadratures of `|alpha>` before any loss.
pub fn mean_quadratures(alpha: Complex64) -> (f64, f64) {
    (2.0 * alpha.re, 2.0 * alpha.im)
}

/// Local-oscillator phase setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LoPhase {
    Zero,
    QuarterPi,
    HalfPi,
}

impl LoPhase {
    pub const TOMOGRAPHY: [LoPhase; 3] = [LoPhase::Zero, LoPhase::QuarterPi, LoPhase::HalfPi];
    pub const DATA: [LoPhase; 2] = [LoPhase::Zero, LoPhase::HalfPi];

    pub fn radians(self) -> f64 {
        match self {
            LoPhase::Zero => 0.0,
            LoPhase::QuarterPi => std::f64::consts::FRAC_PI_4,
            LoPhase::HalfPi => std::f64::consts::FRAC_PI_2,
        }
    }

    /// Nearest setting, if `radians` is within 1e-9 of one.
    pub fn from_radians(radians: f64) -> Option<Self> {
        Self::TOMOGRAPHY
            .into_iter()
            .find(|p| (p.radians() - radians).abs() < 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotRole {
    Data,
    Tomography,
}

impl SlotRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SlotRole::Data => "data",
            SlotRole::Tomography => "tomography",
        }
    }
}

/// Bob's measurement choice for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSetting {
    pub phase: LoPhase,
    pub role: SlotRole,
}

impl SlotSetting {
    pub fn new(phase: LoPhase, role: SlotRole) -> Result<Self, ChannelError> {
        if role == SlotRole::Data && phase == LoPhase::QuarterPi {
            return Err(ChannelError::DataPhase);
        }
        Ok(Self { phase, role })
    }

    /// Bob's random choice: tomography with probability `p_tomo` and a phase
    /// uniform over the allowed set for the role.
    pub fn random(p_tomo: f64, rng: &mut impl Rng) -> Self {
        if rng.gen::<f64>() < p_tomo {
            Self {
                phase: LoPhase::TOMOGRAPHY[rng.gen_range(0..3)],
                role: SlotRole::Tomography,
            }
        } else {
            Self {
                phase: LoPhase::DATA[rng.gen_range(0..2)],
                role: SlotRole::Data,
            }
        }
    }
}

/// One homodyne outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub slot_id: u64,
    pub phase: LoPhase,
    /// Outcome in SNU.
    pub value: f64,
    pub role: SlotRole,
}

/// Mean of the homodyne outcome for `alpha` measured at `phase`.
pub fn received_mean(alpha: Complex64, phase: f64, params: &ChannelParams) -> f64 {
    let phi = phase + params.phase_offset;
    2.0 * params.total_transmission().sqrt() * (alpha.re * phi.cos() + alpha.im * phi.sin())
}

/// Draws one homodyne outcome.
pub fn homodyne_sample(
    alpha: Complex64,
    phase: f64,
    params: &ChannelParams,
    rng: &mut impl Rng,
) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    received_mean(alpha, phase, params) + params.noise_variance().sqrt() * z
}

/// Outcome of slot `slot_id`; depends only on its arguments.
pub fn sample_slot(
    alpha: Complex64,
    phase: f64,
    params: &ChannelParams,
    seed: u64,
    slot_id: u64,
) -> f64 {
    homodyne_sample(alpha, phase, params, &mut substream(seed, slot_id))
}

/// Simulates consecutive slots starting at `first_slot`.
pub fn run_batch(
    symbols: &[Symbol],
    settings: &[SlotSetting],
    r: f64,
    params: &ChannelParams,
    seed: u64,
    first_slot: u64,
) -> Result<Vec<QuadratureRecord>, ChannelError> {
    run_batch_with_workers(symbols, settings, r, params, seed, first_slot, 1)
}

/// [`run_batch`] split over `workers` threads. Output is identical for any
/// worker count.
pub fn run_batch_with_workers(
    symbols: &[Symbol],
    settings: &[SlotSetting],
    r: f64,
    params: &ChannelParams,
    seed: u64,
    first_slot: u64,
    workers: usize,
) -> Result<Vec<QuadratureRecord>, ChannelError> {
    if symbols.len() != settings.len() {
        return Err(ChannelError::LengthMismatch {
            symbols: symbols.len(),
            settings: settings.len(),
        });
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(ChannelError::InvalidAmplitude(r));
    }
    params.validate()?;
    let one = |(k, (sym, set)): (usize, (&Symbol, &SlotSetting))| {
        let slot_id = first_slot + k as u64;
        QuadratureRecord {
            slot_id,
            phase: set.phase,
            value: sample_slot(sym.amplitude(r), set.phase.radians(), params, seed, slot_id),
            role: set.role,
        }
    };
    if workers <= 1 {
        return Ok(symbols.iter().zip(settings).enumerate().map(one).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ChannelError::InvalidParams(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        symbols
            .par_iter()
            .zip(settings.par_iter())
            .enumerate()
            .map(one)
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn stats(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn modulation_examples() {
        let a = modulate_symbol(1, 0.0).unwrap();
        assert_eq!(mean_quadratures(a), (0.0, 0.0));
        let a = modulate_symbol(1, 0.5).unwrap();
        assert_eq!(a, Complex64::new(0.5, 0.5));
        assert_eq!(mean_quadratures(a), (1.0, 1.0));
        let a = modulate_symbol(4, 0.5).unwrap();
        assert_eq!(mean_quadratures(a), (-1.0, -1.0));
        assert_eq!(modulate_symbol(0, 0.5), Err(ChannelError::InvalidSymbol(0)));
        assert_eq!(modulate_symbol(5, 0.5), Err(ChannelError::InvalidSymbol(5)));
        assert!(modulate_symbol(1, -0.1).is_err());
    }

    #[test]
    fn constellation_has_equal_magnitudes() {
        let mags: Vec<f64> = Symbol::ALL
            .iter()
            .map(|s| s.amplitude(0.7).norm())
            .collect();
        assert!(mags.iter().all(|m| (m - mags[0]).abs() < 1e-15));
        for s in Symbol::ALL {
            assert_eq!(s.antipodal().amplitude(1.0), -s.amplitude(1.0));
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(ChannelParams::new(0.0, 0.5, 0.0, 0.0).is_err());
        assert!(ChannelParams::new(1.1, 0.5, 0.0, 0.0).is_err());
        assert!(ChannelParams::new(0.5, 0.0, 0.0, 0.0).is_err());
        assert!(ChannelParams::new(0.5, 0.5, -0.1, 0.0).is_err());
        assert!(ChannelParams::new(0.5, 0.5, 0.0, -1e-3).is_err());
        assert!(ChannelParams::new(1.0, 1.0, 0.0, 0.0).is_ok());
        assert!((transmission_from_db(10.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn vacuum_has_unit_variance() {
        let p = ChannelParams::ideal();
        let xs: Vec<f64> = (0..1_000_000)
            .map(|k| sample_slot(Complex64::new(0.0, 0.0), 0.3, &p, 12, k))
            .collect();
        let (mean, var) = stats(&xs);
        assert!(mean.abs() < 0.004, "mean {mean}");
        // standard error of the variance is sqrt(2 / n) = 0.0014
        assert!((var - 1.0).abs() < 0.005, "var {var}");
    }

    #[test]
    fn noise_variances_add() {
        let p = ChannelParams::new(1.0, 1.0, 0.0024, 0.069).unwrap();
        let xs: Vec<f64> = (0..1_000_000)
            .map(|k| sample_slot(Complex64::new(0.0, 0.0), 0.0, &p, 5, k))
            .collect();
        let (_, var) = stats(&xs);
        assert!((var - 1.0714).abs() < 0.005, "var {var}");
    }

    #[test]
    fn snr_point_mean() {
        let eta = transmission_from_db(5.18) * 0.56;
        let p = ChannelParams::new(transmission_from_db(5.18), 0.56, 0.0024, 0.069).unwrap();
        let r = amplitude_for_snr(0.272, eta);
        let alpha = Symbol::new(1).unwrap().amplitude(r);
        let closed = received_mean(alpha, 0.0, &p);
        assert!((closed - 0.272f64.sqrt()).abs() < 1e-12);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|k| sample_slot(alpha, 0.0, &p, 77, k)).collect();
        let (mean, var) = stats(&xs);
        let se = (var / n as f64).sqrt();
        assert!((mean - 0.5215).abs() < 3.0 * se + 1e-4, "mean {mean}");
    }

    #[test]
    fn data_slots_reject_diagonal_phase() {
        assert_eq!(
            SlotSetting::new(LoPhase::QuarterPi, SlotRole::Data),
            Err(ChannelError::DataPhase)
        );
        assert!(SlotSetting::new(LoPhase::QuarterPi, SlotRole::Tomography).is_ok());
        assert_eq!(LoPhase::from_radians(FRAC_PI_4), Some(LoPhase::QuarterPi));
        assert_eq!(LoPhase::from_radians(1.0), None);
    }

    #[test]
    fn batch_basics() {
        let p = ChannelParams::ideal();
        assert!(run_batch(&[], &[], 0.5, &p, 1, 0).unwrap().is_empty());
        let set = SlotSetting::new(LoPhase::Zero, SlotRole::Data).unwrap();
        assert!(matches!(
            run_batch(&[Symbol::new(1).unwrap()], &[set, set], 0.5, &p, 1, 0),
            Err(ChannelError::LengthMismatch { .. })
        ));
    }
}
