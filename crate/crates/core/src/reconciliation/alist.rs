//! Reading and writing parity-check matrices in alist format.
//!
//! Layout: `n m`, then the maximum column and row weights, the n column
//! weights, the m row weights, n lines of 1-based check indices per column
//! and m lines of 1-based variable indices per row. Zero padding on the
//! adjacency lines is written and tolerated on input.

use std::fmt::Write as _;

use super::code::ParityCheckMatrix;
use super::ReconciliationError;

pub fn to_alist(h: &ParityCheckMatrix) -> String {
    let cols = h.columns();
    let rows = h.rows();
    let max_col = cols.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::new();
    let join =
        |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    writeln!(out, "{} {}", h.n(), h.m()).unwrap();
    writeln!(out, "{max_col} {max_row}").unwrap();
    writeln!(out, "{}", join(&mut cols.iter().map(Vec::len))).unwrap();
    writeln!(out, "{}", join(&mut rows.iter().map(Vec::len))).unwrap();
    for col in cols {
        let mut sorted = col.clone();
        sorted.sort_unstable();
        let padded = sorted
            .iter()
            .map(|&c| c as usize + 1)
            .chain(std::iter::repeat_n(0, max_col - col.len()));
        writeln!(out, "{}", join(&mut padded.into_iter())).unwrap();
    }
    for row in rows {
        let padded = row
            .iter()
            .map(|&v| v as usize + 1)
            .chain(std::iter::repeat_n(0, max_row - row.len()));
        writeln!(out, "{}", join(&mut padded.into_iter())).unwrap();
    }
    out
}

pub fn from_alist(text: &str, seed: u64) -> Result<ParityCheckMatrix, ReconciliationError> {
    let bad = |msg: &str| ReconciliationError::InvalidMatrix(format!("alist: {msg}"));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut numbers = |what: &str| -> Result<Vec<usize>, ReconciliationError> {
        let line = lines
            .next()
            .ok_or_else(|| bad(&format!("missing {what}")))?;
        line.split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| bad(&format!("bad number {t:?} in {what}")))
            })
            .collect()
    };
    let dims = numbers("dimensions")?;
    let [n, m] = dims[..] else {
        return Err(bad("dimension line must hold n and m"));
    };
    let _max = numbers("maximum weights")?;
    let col_w = numbers("column weights")?;
    let row_w = numbers("row weights")?;
    if col_w.len() != n || row_w.len() != m {
        return Err(bad("weight list length mismatch"));
    }
    let mut from_cols = vec![Vec::new(); m];
    for (v, &w) in col_w.iter().enumerate() {
        let entries: Vec<usize> = numbers("column adjacency")?
            .into_iter()
            .filter(|&x| x != 0)
            .collect();
        if entries.len() != w {
            return Err(bad(&format!(
                "column {v} lists {} entries, weight {w}",
                entries.len()
            )));
        }
        for c in entries {
            if c > m {
                return Err(bad(&format!("check index {c} out of range")));
            }
            from_cols[c - 1].push(v as u32);
        }
    }
    let mut rows = Vec::with_capacity(m);
    for (c, &w) in row_w.iter().enumerate() {
        let entries: Vec<u32> = numbers("row adjacency")?
            .into_iter()
            .filter(|&x| x != 0)
            .map(|x| x as u32 - 1)
            .collect();
        if entries.len() != w {
            return Err(bad(&format!(
                "row {c} lists {} entries, weight {w}",
                entries.len()
            )));
        }
        let mut a = entries.clone();
        let mut b = from_cols[c].clone();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(bad(&format!("row {c} disagrees with the column lists")));
        }
        rows.push(entries);
    }
    ParityCheckMatrix::from_rows(n, rows, seed)
}
