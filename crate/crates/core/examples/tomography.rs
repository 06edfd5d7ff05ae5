//! Conditional-state tomography from simulated records: per-cell Gaussian
//! fits, reconstructed covariances and the excess-noise estimate.
//!
//!     cargo run --release --example tomography -- [samples per cell]

use std::collections::BTreeMap;

use cvqkd::channel::{sample_slot, LoPhase, Symbol};
use cvqkd::protocol::SessionConfig;
use cvqkd::tomography::TomographyReport;

fn main() {
    let n: u64 = std::env::args()
        .nth(1)
        .map_or(100_000, |s| s.parse().expect("sample count"));
    let config = SessionConfig::paper_24km();
    let params = config.channel;
    let r = config.amplitude();
    let mut cells = BTreeMap::new();
    let mut slot = 0;
    for s in Symbol::ALL {
        for phase in LoPhase::TOMOGRAPHY {
            let x = (0..n)
                .map(|k| sample_slot(s.amplitude(r), phase.radians(), &params, 7, slot + k))
                .collect();
            slot += n;
            cells.insert((s, phase), x);
        }
    }
    let report =
        TomographyReport::from_cells(&cells, params.electronic_noise).expect("enough samples");
    for f in &report.fits {
        let p = f.fit.goodness.as_ref().map_or(f64::NAN, |g| g.p_value);
        println!(
            "symbol {} phase {:.4}: mean {:+.4} var {:.4} chi-square p {:.3}",
            f.symbol.index(),
            f.phase,
            f.fit.mean,
            f.fit.variance,
            p
        );
    }
    for st in &report.states {
        let c = st.covariance;
        println!(
            "state {}: mean ({:+.4}, {:+.4}) cov [[{:.4}, {:+.4}], [{:+.4}, {:.4}]] eps {:+.5}",
            st.symbol.index(),
            st.mean[0],
            st.mean[1],
            c[0][0],
            c[0][1],
            c[1][0],
            c[1][1],
            st.excess_noise
        );
    }
    let e = &report.excess_noise;
    println!(
        "excess noise {:.5} (injected {}), spread {:.5}",
        e.average, params.excess_noise, e.spread
    );
}
