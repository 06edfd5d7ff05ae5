//! Codes are rebuilt from `(n, m, seed)`, which both parties know. Recent
//! builds are cached because construction dominates short sessions.

use std::sync::{Arc, Mutex, OnceLock};

use crate::reconciliation::{
    build_code_with_checks, DegreeProfile, ParityCheckMatrix, ReconciliationError,
    SumProductDecoder,
};

const CACHE_SLOTS: usize = 4;

pub struct Code {
    pub matrix: ParityCheckMatrix,
    pub decoder: SumProductDecoder,
}

type Cache = Mutex<Vec<((usize, usize, u64), Arc<Code>)>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(Vec::new()))
}

pub fn code(n: usize, m: usize, seed: u64) -> Result<Arc<Code>, ReconciliationError> {
    let key = (n, m, seed);
    if let Some((_, c)) = cache().lock().unwrap().iter().find(|(k, _)| *k == key) {
        return Ok(c.clone());
    }
    let rate = 1.0 - m as f64 / n as f64;
    let matrix = build_code_with_checks(n, m, &DegreeProfile::for_rate(rate), seed)?;
    let decoder = SumProductDecoder::new(&matrix);
    let built = Arc::new(Code { matrix, decoder });
    let mut guard = cache().lock().unwrap();
    if !guard.iter().any(|(k, _)| *k == key) {
        if guard.len() == CACHE_SLOTS {
            guard.remove(0);
        }
        guard.push((key, built.clone()));
    }
    Ok(built)
}
