//! `slot_id,phase,value,role` record files, optionally with a trailing
//! `symbol` column naming Alice's disclosed symbol (tomography exports).

use std::io::{Read, Write};

use super::{ChannelError, LoPhase, QuadratureRecord, SlotRole, Symbol};
use crate::math::format_significant;

/// A record plus the symbol Alice disclosed for its slot, when known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordRow {
    pub record: QuadratureRecord,
    pub symbol: Option<Symbol>,
}

fn csv_err(e: impl std::fmt::Display) -> ChannelError {
    ChannelError::Csv(e.to_string())
}

/// Writes rows with phases at 12 significant digits. The `symbol` column is
/// emitted when any row carries one.
pub fn write_records_csv<W: Write>(out: W, rows: &[RecordRow]) -> Result<(), ChannelError> {
    let with_symbol = rows.iter().any(|r| r.symbol.is_some());
    let mut w = ::csv::Writer::from_writer(out);
    let mut header = vec!["slot_id", "phase", "value", "role"];
    if with_symbol {
        header.push("symbol");
    }
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let r = &row.record;
        let mut fields = vec![
            r.slot_id.to_string(),
            format_significant(r.phase.radians(), 12),
            r.value.to_string(),
            r.role.as_str().to_string(),
        ];
        if with_symbol {
            fields.push(
                row.symbol
                    .map(|s| s.index().to_string())
                    .unwrap_or_default(),
            );
        }
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<RecordRow>, ChannelError> {
    let mut rdr = ::csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let expected = ["slot_id", "phase", "value", "role"];
    if headers.len() < 4 || headers.iter().take(4).ne(expected.iter().copied()) {
        return Err(ChannelError::Csv(format!("unexpected header {headers:?}")));
    }
    let has_symbol = headers.get(4) == Some("symbol");
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let at = |what: &str| ChannelError::Csv(format!("row {}: bad {what}", line + 1));
        let slot_id = field(0).parse::<u64>().map_err(|_| at("slot_id"))?;
        let radians = field(1).parse::<f64>().map_err(|_| at("phase"))?;
        let phase = LoPhase::from_radians(radians).ok_or_else(|| at("phase"))?;
        let value = field(2).parse::<f64>().map_err(|_| at("value"))?;
        let role = match field(3) {
            "data" => SlotRole::Data,
            "tomography" => SlotRole::Tomography,
            _ => return Err(at("role")),
        };
        if role == SlotRole::Data && phase == LoPhase::QuarterPi {
            return Err(ChannelError::DataPhase);
        }
        let symbol = if has_symbol && !field(4).is_empty() {
            let idx = field(4).parse::<u8>().map_err(|_| at("symbol"))?;
            Some(Symbol::new(idx)?)
        } else {
            None
        };
        rows.push(RecordRow {
            record: QuadratureRecord {
                slot_id,
                phase,
                value,
                role,
            },
            symbol,
        });
    }
    Ok(rows)
}
