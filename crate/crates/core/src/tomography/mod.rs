//! Conditional Gaussian-state tomography from tomography-slot records.
//!
//! Each (symbol, phase) cell is fitted by moment matching; the three phases
//! 0, pi/4 and pi/2 pin down the 2x2 covariance exactly.

mod report;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::channel::{LoPhase, Symbol};
use crate::math::gaussian_cdf;

pub use report::{write_histogram_csv, CellFit, TomographyReport};

/// Smallest sample count accepted by [`fit_quadrature_gaussian`].
pub const MIN_SAMPLES: usize = 100;
pub const HISTOGRAM_BINS: usize = 64;
/// Histogram half-width in fitted standard deviations.
pub const HISTOGRAM_SPAN: f64 = 5.0;
/// Bins are merged until each expects at least this many counts.
pub const MIN_EXPECTED: f64 = 5.0;
/// Slack on `det(Sigma) >= 1` before a state is flagged unphysical.
pub const UNCERTAINTY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomographyError {
    #[error("need at least {MIN_SAMPLES} samples, got {0}")]
    InsufficientSamples(usize),
    #[error("non-finite sample value")]
    NonFinite,
    #[error("fits must share one symbol")]
    MixedSymbols,
    #[error("missing data for symbol {symbol} at phase {phase:?}")]
    MissingCell { symbol: u8, phase: LoPhase },
    #[error("need one estimate per symbol, got {0}")]
    MissingSymbols(usize),
}

/// Chi-square goodness of fit of a histogram against the fitted Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodnessOfFit {
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureFit {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub n: usize,
    /// `None` for degenerate fits.
    pub goodness: Option<GoodnessOfFit>,
    /// All samples equal.
    pub degenerate: bool,
}

impl QuadratureFit {
    pub fn mean_standard_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }

    pub fn variance_standard_error(&self) -> f64 {
        self.variance * (2.0 / (self.n as f64 - 1.0)).sqrt()
    }

    pub fn passes(&self, level: f64) -> bool {
        self.goodness.is_some_and(|g| g.p_value >= level)
    }
}

fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Histogram of one (symbol, phase) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseHistogram {
    pub symbol: Symbol,
    pub phase: LoPhase,
    /// `HISTOGRAM_BINS + 1` edges, SNU. Samples beyond the outer edges are
    /// counted in the outermost bins.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

impl PhaseHistogram {
    pub fn new(symbol: Symbol, phase: LoPhase, values: &[f64]) -> Result<Self, TomographyError> {
        if values.len() < MIN_SAMPLES {
            return Err(TomographyError::InsufficientSamples(values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TomographyError::NonFinite);
        }
        let (mean, variance) = moments(values);
        let half = HISTOGRAM_SPAN * variance.sqrt().max(1e-12);
        let width = 2.0 * half / HISTOGRAM_BINS as f64;
        let lo = mean - half;
        let edges: Vec<f64> = (0..=HISTOGRAM_BINS)
            .map(|k| lo + width * k as f64)
            .collect();
        let mut counts = vec![0u64; HISTOGRAM_BINS];
        for &v in values {
            let k = ((v - lo) / width).floor();
            let k = if k < 0.0 {
                0
            } else {
                (k as usize).min(HISTOGRAM_BINS - 1)
            };
            counts[k] += 1;
        }
        Ok(Self {
            symbol,
            phase,
            edges,
            counts,
            n: values.len(),
            mean,
            variance,
        })
    }

    /// Expected counts under `N(mean, variance)`, with the outer bins
    /// absorbing the tails.
    pub fn expected_counts(&self) -> Vec<f64> {
        let sd = self.variance.sqrt();
        let k = self.counts.len();
        (0..k)
            .map(|i| {
                let a = if i == 0 {
                    0.0
                } else {
                    gaussian_cdf((self.edges[i] - self.mean) / sd)
                };
                let b = if i + 1 == k {
                    1.0
                } else {
                    gaussian_cdf((self.edges[i + 1] - self.mean) / sd)
                };
                self.n as f64 * (b - a)
            })
            .collect()
    }

    /// Pearson chi-square after merging sparse bins; two fitted parameters.
    pub fn goodness_of_fit(&self) -> Option<GoodnessOfFit> {
        if !(self.variance > 0.0) {
            return None;
        }
        let expected = self.expected_counts();
        let mut merged: Vec<(f64, f64)> = Vec::new();
        let (mut obs, mut exp) = (0.0, 0.0);
        for (&c, &e) in self.counts.iter().zip(&expected) {
            obs += c as f64;
            exp += e;
            if exp >= MIN_EXPECTED {
                merged.push((obs, exp));
                obs = 0.0;
                exp = 0.0;
            }
        }
        if exp > 0.0 || obs > 0.0 {
            match merged.last_mut() {
                Some(last) => {
                    last.0 += obs;
                    last.1 += exp;
                }
                None => merged.push((obs, exp)),
            }
        }
        if merged.len() < 4 {
            return None;
        }
        let chi_square: f64 = merged.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
        let dof = merged.len() - 3;
        let p_value = ChiSquared::new(dof as f64).ok()?.sf(chi_square);
        Some(GoodnessOfFit {
            chi_square,
            dof,
            p_value,
        })
    }
}

/// Gaussian fit of one cell of samples.
pub fn fit_quadrature_gaussian(values: &[f64]) -> Result<QuadratureFit, TomographyError> {
    // symbol and phase labels do not affect the fit
    let hist = PhaseHistogram::new(Symbol::ALL[0], LoPhase::Zero, values)?;
    Ok(fit_from_histogram(&hist, values))
}

fn fit_from_histogram(hist: &PhaseHistogram, values: &[f64]) -> QuadratureFit {
    let degenerate = values.iter().all(|&v| v == values[0]);
    let (mean, variance) = if degenerate {
        (values[0], 0.0)
    } else {
        (hist.mean, hist.variance)
    };
    QuadratureFit {
        mean,
        variance,
        n: hist.n,
        goodness: if degenerate {
            None
        } else {
            hist.goodness_of_fit()
        },
        degenerate,
    }
}

/// Gaussian estimate of Bob's state conditioned on one symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalStateEstimate {
    pub symbol: Symbol,
    /// `(m_x, m_p)`, SNU.
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    pub excess_noise: f64,
    /// Samples at phases 0, pi/4, pi/2.
    pub counts: [usize; 3],
    /// `mean(pi/4) - (m_x + m_p)/sqrt(2)`.
    pub residual: f64,
    pub positive_definite: bool,
    /// `det(Sigma) >= 1` within [`UNCERTAINTY_TOLERANCE`].
    pub physical: bool,
}

impl ConditionalStateEstimate {
    pub fn determinant(&self) -> f64 {
        let c = &self.covariance;
        c[0][0] * c[1][1] - c[0][1] * c[1][0]
    }

    /// Variance along phase `phi` implied by the covariance.
    pub fn variance_at(&self, phi: f64) -> f64 {
        let c = &self.covariance;
        let (s, co) = phi.sin_cos();
        c[0][0] * co * co + c[1][1] * s * s + 2.0 * c[0][1] * s * co
    }

    pub fn flagged(&self) -> bool {
        !self.positive_definite || !self.physical
    }
}

/// Solves the covariance from fits at 0, pi/4 and pi/2 (in that order).
pub fn reconstruct_gaussian_state(
    symbol: Symbol,
    fits: [&QuadratureFit; 3],
    electronic_noise: f64,
) -> ConditionalStateEstimate {
    let [f0, f45, f90] = fits;
    let sxx = f0.variance;
    let spp = f90.variance;
    let sxp = f45.variance - (sxx + spp) / 2.0;
    let det = sxx * spp - sxp * sxp;
    ConditionalStateEstimate {
        symbol,
        mean: [f0.mean, f90.mean],
        covariance: [[sxx, sxp], [sxp, spp]],
        excess_noise: (sxx + spp) / 2.0 - 1.0 - electronic_noise,
        counts: [f0.n, f45.n, f90.n],
        residual: f45.mean - (f0.mean + f90.mean) / std::f64::consts::SQRT_2,
        positive_definite: sxx > 0.0 && det > 0.0,
        physical: det >= 1.0 - UNCERTAINTY_TOLERANCE,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessNoiseSummary {
    pub average: f64,
    pub per_symbol: Vec<f64>,
    /// Largest minus smallest per-symbol value.
    pub spread: f64,
}

pub fn estimate_excess_noise(
    estimates: &[ConditionalStateEstimate],
) -> Result<ExcessNoiseSummary, TomographyError> {
    if estimates.len() != 4 {
        return Err(TomographyError::MissingSymbols(estimates.len()));
    }
    let per_symbol: Vec<f64> = estimates.iter().map(|e| e.excess_noise).collect();
    let max = per_symbol.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = per_symbol.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ExcessNoiseSummary {
        average: per_symbol.iter().sum::<f64>() / 4.0,
        per_symbol,
        spread: max - min,
    })
}

/// Fits one cell, keeping the histogram.
pub fn fit_cell(
    symbol: Symbol,
    phase: LoPhase,
    values: &[f64],
) -> Result<(PhaseHistogram, QuadratureFit), TomographyError> {
    let hist = PhaseHistogram::new(symbol, phase, values)?;
    let fit = fit_from_histogram(&hist, values);
    Ok((hist, fit))
}
