//! Runs one full session on a preset and prints the outcome.
//!
//!     cargo run --release --example session -- paper-24km [slots]

use std::time::Instant;

use cvqkd::protocol::{run_session, SessionConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "paper-24km".into());
    let mut config = SessionConfig::preset(&preset).expect("known preset");
    if let Some(slots) = args.next() {
        config.slots = slots.parse().expect("slot count");
    }
    let t = Instant::now();
    let r = run_session(&config).expect("session runs");
    let rep = &r.report;
    println!("preset        {preset}");
    println!("slots         {}", rep.lengths.slots);
    println!("accepted      {}", rep.lengths.accepted);
    println!("reconciled    {}", rep.lengths.reconciled);
    println!("final key     {}", rep.lengths.final_key);
    if let Some(sec) = &rep.security {
        println!("p_acc         {:.5}", sec.p_acc);
        println!("e (est)       {:.5}", sec.error_rate);
        println!("I_AB          {:.5}", sec.i_ab);
        println!("chi_BE        {:.5}", sec.chi_be);
        println!("closed form   {:.1} b/s", sec.bits_per_sec);
    }
    if let Some(rec) = &rep.reconciliation {
        println!(
            "blocks        {}/{} verified, n = {}, rate {:.4}, e measured {:.5}",
            rec.verified_blocks,
            rec.plan.blocks,
            rec.plan.n,
            rec.plan.rate,
            rec.measured_error_rate
        );
    }
    println!(
        "key rate      {:.1} b/s ({:.3e} bits/slot)",
        rep.bits_per_sec, rep.bits_per_slot
    );
    println!("keys match    {}", rep.keys_match);
    println!("exit code     {}", rep.exit_code);
    if let Some(a) = rep.outcome.abort() {
        println!("abort         {:?} at {:?}: {}", a.cause, a.stage, a.detail);
    }
    println!("elapsed       {:.1} s", t.elapsed().as_secs_f64());
}
