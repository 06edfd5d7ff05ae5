//! Homodyne statistics per symbol and LO phase at the 24 km operating point,
//! against the predicted received means.
//!
//!     cargo run --release --example channel -- [samples]

use cvqkd::channel::{received_mean, sample_slot, LoPhase, Symbol};
use cvqkd::protocol::SessionConfig;

fn main() {
    let n: u64 = std::env::args()
        .nth(1)
        .map_or(200_000, |s| s.parse().expect("sample count"));
    let config = SessionConfig::paper_24km();
    let params = config.channel;
    let r = config.amplitude();
    println!(
        "r = {r:.4}, eta = {:.4}, noise variance {:.4}",
        params.total_transmission(),
        params.noise_variance()
    );
    println!("sym  phase   mean     predicted  variance");
    let mut slot = 0;
    for s in Symbol::ALL {
        for phase in LoPhase::TOMOGRAPHY {
            let x: Vec<f64> = (0..n)
                .map(|k| sample_slot(s.amplitude(r), phase.radians(), &params, 42, slot + k))
                .collect();
            slot += n;
            let m = x.iter().sum::<f64>() / n as f64;
            let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            let p = received_mean(s.amplitude(r), phase.radians(), &params);
            println!(
                "{}    {:<6.4}  {m:+.4}  {p:+.4}    {v:.4}",
                s.index(),
                phase.radians()
            );
        }
    }
}
