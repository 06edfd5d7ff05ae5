use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    estimate_excess_noise, fit_cell, reconstruct_gaussian_state, ConditionalStateEstimate,
    ExcessNoiseSummary, PhaseHistogram, QuadratureFit, TomographyError,
};
use crate::channel::RecordRow;
use crate::channel::{LoPhase, SlotRole, Symbol};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFit {
    pub symbol: Symbol,
    pub phase: f64,
    #[serde(flatten)]
    pub fit: QuadratureFit,
}

/// Fits for every (symbol, phase) cell, the four conditional states and the
/// excess-noise summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyReport {
    pub electronic_noise: f64,
    pub fits: Vec<CellFit>,
    pub states: Vec<ConditionalStateEstimate>,
    pub excess_noise: ExcessNoiseSummary,
    #[serde(skip)]
    pub histograms: Vec<PhaseHistogram>,
}

impl TomographyReport {
    /// `cells` maps each (symbol, phase) to its samples; all twelve cells
    /// must be present.
    pub fn from_cells(
        cells: &BTreeMap<(Symbol, LoPhase), Vec<f64>>,
        electronic_noise: f64,
    ) -> Result<Self, TomographyError> {
        let keys: Vec<(Symbol, LoPhase)> = Symbol::ALL
            .iter()
            .flat_map(|&s| LoPhase::TOMOGRAPHY.iter().map(move |&p| (s, p)))
            .collect();
        for &(s, p) in &keys {
            if !cells.contains_key(&(s, p)) {
                return Err(TomographyError::MissingCell {
                    symbol: s.index(),
                    phase: p,
                });
            }
        }
        let fitted: Vec<(PhaseHistogram, QuadratureFit)> = keys
            .par_iter()
            .map(|&(s, p)| fit_cell(s, p, &cells[&(s, p)]))
            .collect::<Result<_, _>>()?;
        let states: Vec<ConditionalStateEstimate> = fitted
            .chunks(3)
            .zip(Symbol::ALL)
            .map(|(c, s)| {
                reconstruct_gaussian_state(s, [&c[0].1, &c[1].1, &c[2].1], electronic_noise)
            })
            .collect();
        let excess_noise = estimate_excess_noise(&states)?;
        let fits = keys
            .iter()
            .zip(&fitted)
            .map(|(&(symbol, phase), (_, fit))| CellFit {
                symbol,
                phase: phase.radians(),
                fit: fit.clone(),
            })
            .collect();
        Ok(Self {
            electronic_noise,
            fits,
            states,
            excess_noise,
            histograms: fitted.into_iter().map(|(h, _)| h).collect(),
        })
    }

    /// Groups tomography rows that carry a symbol label. Data rows and
    /// unlabelled rows are ignored.
    pub fn from_records(
        rows: &[RecordRow],
        electronic_noise: f64,
    ) -> Result<Self, TomographyError> {
        let mut cells: BTreeMap<(Symbol, LoPhase), Vec<f64>> = BTreeMap::new();
        for row in rows {
            if row.record.role != SlotRole::Tomography {
                continue;
            }
            if let Some(symbol) = row.symbol {
                cells
                    .entry((symbol, row.record.phase))
                    .or_default()
                    .push(row.record.value);
            }
        }
        Self::from_cells(&cells, electronic_noise)
    }

    /// Smallest chi-square p-value over the cells.
    pub fn worst_p_value(&self) -> Option<f64> {
        self.fits
            .iter()
            .map(|c| c.fit.goodness.map(|g| g.p_value))
            .collect::<Option<Vec<_>>>()
            .map(|v| v.into_iter().fold(1.0, f64::min))
    }
}

/// `symbol,phase,bin_lo,bin_hi,count,expected` for every histogram.
pub fn write_histogram_csv<W: Write>(out: W, histograms: &[PhaseHistogram]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["symbol", "phase", "bin_lo", "bin_hi", "count", "expected"])
        .map_err(std::io::Error::other)?;
    for h in histograms {
        let expected = h.expected_counts();
        for (k, &count) in h.counts.iter().enumerate() {
            w.write_record([
                h.symbol.index().to_string(),
                h.phase.radians().to_string(),
                h.edges[k].to_string(),
                h.edges[k + 1].to_string(),
                count.to_string(),
                expected[k].to_string(),
            ])
            .map_err(std::io::Error::other)?;
        }
    }
    w.flush()
}
