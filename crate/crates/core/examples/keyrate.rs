//! Closed-form key rate at a preset and its post-selection threshold sweep.
//!
//!     cargo run --release --example keyrate -- [preset]

use cvqkd::protocol::SessionConfig;
use cvqkd::security::sweep::argmax;
use cvqkd::security::{evaluate, is_unimodal, sweep_threshold, BeamsplitterAttack};

fn main() {
    let preset = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "paper-24km".into());
    let config = SessionConfig::preset(&preset).expect("known preset");
    let op = config.operating_point();
    let rep = evaluate(
        &op,
        &BeamsplitterAttack,
        config.excess_noise_ceiling,
        config.symbol_rate,
    )
    .unwrap();
    println!(
        "{preset}: mu {:.4} T {:.4} p_acc {:.5} e {:.5} I_AB {:.5} chi_BE {:.5}",
        op.mu, op.threshold, rep.p_acc, rep.error_rate, rep.i_ab, rep.chi_be
    );
    println!(
        "margin {:+.5} bits/use, {:.1} b/s, {:?}",
        rep.delta_i_use, rep.bits_per_sec, rep.verdict
    );

    let rows = sweep_threshold(&op, &BeamsplitterAttack, 0.0, 2.5, 51, config.symbol_rate).unwrap();
    for r in rows.iter().step_by(5) {
        println!(
            "T {:.2}  p_acc {:.4}  e {:.4}  dI {:+.5}  {:.1} b/s",
            r.threshold, r.p_acc, r.e, r.delta_i_use, r.bits_per_sec
        );
    }
    let best = &rows[argmax(&rows).unwrap()];
    let rates: Vec<f64> = rows.iter().map(|r| r.bits_per_sec).collect();
    println!(
        "best T {:.2} at {:.1} b/s, unimodal {}",
        best.threshold,
        best.bits_per_sec,
        is_unimodal(&rates, 1e-9)
    );
}
