//! Closed-form threshold sweeps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, AttackModel, OperatingPoint, SecurityError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "T")]
    pub threshold: f64,
    pub p_acc: f64,
    pub e: f64,
    #[serde(rename = "I_AB")]
    pub i_ab: f64,
    #[serde(rename = "chi_BE")]
    pub chi_be: f64,
    #[serde(rename = "dI_use")]
    pub delta_i_use: f64,
    pub bits_per_sec: f64,
}

/// Evaluates `steps` thresholds evenly spaced over `[from, to]`.
pub fn sweep_threshold(
    base: &OperatingPoint,
    attack: &dyn AttackModel,
    from: f64,
    to: f64,
    steps: usize,
    symbol_rate: f64,
) -> Result<Vec<SweepRow>, SecurityError> {
    if steps == 0 || !(to >= from) || from < 0.0 {
        return Err(SecurityError::InvalidOperatingPoint(format!(
            "empty sweep range [{from}, {to}] with {steps} steps"
        )));
    }
    (0..steps)
        .into_par_iter()
        .map(|k| {
            let t = if steps == 1 {
                from
            } else {
                from + (to - from) * k as f64 / (steps - 1) as f64
            };
            let op = OperatingPoint {
                threshold: t,
                ..*base
            };
            let r = evaluate(&op, attack, f64::INFINITY, symbol_rate)?;
            Ok(SweepRow {
                threshold: t,
                p_acc: r.p_acc,
                e: r.error_rate,
                i_ab: r.i_ab,
                chi_be: r.chi_be,
                delta_i_use: r.delta_i_use,
                bits_per_sec: r.bits_per_sec,
            })
        })
        .collect()
}

/// Index of the row with the largest key rate.
pub fn argmax(rows: &[SweepRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .max_by(|a, b| a.1.bits_per_sec.total_cmp(&b.1.bits_per_sec))
        .map(|(i, _)| i)
}

/// Non-decreasing then non-increasing, up to `tol`.
pub fn is_unimodal(values: &[f64], tol: f64) -> bool {
    let mut k = 0;
    while k + 1 < values.len() && values[k + 1] >= values[k] - tol {
        k += 1;
    }
    while k + 1 < values.len() && values[k + 1] <= values[k] + tol {
        k += 1;
    }
    k + 1 >= values.len()
}

/// `T,p_acc,e,I_AB,chi_BE,dI_use,bits_per_sec`
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(std::io::Error::other)?;
    }
    if rows.is_empty() {
        w.write_record([
            "T",
            "p_acc",
            "e",
            "I_AB",
            "chi_BE",
            "dI_use",
            "bits_per_sec",
        ])
        .map_err(std::io::Error::other)?;
    }
    w.flush()
}
