//! Frame-error benchmark on a binary symmetric channel.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_code, compute_syndrome, decode, measured_efficiency, verification_tag,
    ReconciliationError, SumProductDecoder,
};
use crate::rng::{derive_seed, substream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchParams {
    pub n: usize,
    pub rate: f64,
    pub crossover: f64,
    pub trials: usize,
    pub max_iter: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub params: BenchParams,
    /// Rate of the constructed matrix, `1 - m/n`.
    pub code_rate: f64,
    /// Frames not accepted, over all frames.
    pub fer: f64,
    pub failed_frames: usize,
    /// Accepted frames.
    pub verified_frames: usize,
    /// Accepted frames that differ from Bob's string.
    pub undetected_errors: usize,
    /// Converged to the right syndrome but rejected by the tag.
    pub caught_by_tag: usize,
    pub mean_iterations: f64,
    /// Code rate over `1 - h2(crossover)`.
    pub efficiency: f64,
    /// Decoded bits per second of wall time.
    pub throughput: f64,
    pub build_seconds: f64,
}

struct Frame {
    accepted: bool,
    wrong: bool,
    converged: bool,
    iterations: usize,
}

/// Runs `trials` frames: Bob draws uniform bits, Alice sees them through a
/// BSC, and Alice decodes against Bob's syndrome and tag.
pub fn benchmark(p: &BenchParams) -> Result<BenchSummary, ReconciliationError> {
    let t0 = Instant::now();
    let h = build_code(p.n, p.rate, derive_seed(p.seed, 0xc0de))?;
    let decoder = SumProductDecoder::new(&h);
    let build_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let frames: Vec<Frame> = (0..p.trials)
        .into_par_iter()
        .map(|t| -> Result<Frame, ReconciliationError> {
            let mut rng = substream(derive_seed(p.seed, 0xf4a3e), t as u64);
            let bob: Vec<u8> = (0..p.n).map(|_| rng.gen::<u8>() & 1).collect();
            let alice: Vec<u8> = bob
                .iter()
                .map(|&b| b ^ u8::from(rng.gen::<f64>() < p.crossover))
                .collect();
            let syndrome = compute_syndrome(&bob, &h)?;
            let tag_seed = rng.gen();
            let tag = verification_tag(&bob, tag_seed);
            let r = decode(
                &decoder,
                &alice,
                &syndrome,
                p.crossover,
                p.max_iter,
                tag,
                tag_seed,
            )?;
            Ok(Frame {
                accepted: r.accepted(),
                wrong: r.corrected != bob,
                converged: r.converged,
                iterations: r.iterations,
            })
        })
        .collect::<Result<_, _>>()?;
    let seconds = t1.elapsed().as_secs_f64();
    let verified = frames.iter().filter(|f| f.accepted).count();
    let failed = frames.len() - verified;
    Ok(BenchSummary {
        params: *p,
        code_rate: h.design_rate(),
        fer: failed as f64 / p.trials.max(1) as f64,
        failed_frames: failed,
        verified_frames: verified,
        undetected_errors: frames.iter().filter(|f| f.accepted && f.wrong).count(),
        caught_by_tag: frames.iter().filter(|f| f.converged && !f.accepted).count(),
        mean_iterations: frames.iter().map(|f| f.iterations as f64).sum::<f64>()
            / p.trials.max(1) as f64,
        efficiency: measured_efficiency(h.design_rate(), p.crossover),
        throughput: (p.n * p.trials) as f64 / seconds.max(1e-9),
        build_seconds,
    })
}
