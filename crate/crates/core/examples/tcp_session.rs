//! Alice and Bob on separate threads over a loopback TCP connection.
//!
//!     cargo run --release --example tcp_session -- [slots]

use cvqkd::protocol::{run_session_over, SessionConfig, StreamTransport};

fn main() {
    let mut config = SessionConfig::ideal();
    if let Some(s) = std::env::args().nth(1) {
        config.slots = s.parse().expect("slot count");
    }
    let (alice, bob) = StreamTransport::tcp_pair().expect("loopback");
    let r = run_session_over(&config, alice, bob).expect("session");
    let rep = &r.report;
    println!(
        "{} slots -> {} accepted -> {} key bits",
        rep.lengths.slots, rep.lengths.accepted, rep.lengths.final_key
    );
    println!(
        "{} transcript bytes, {} leaked bits, keys match {}",
        rep.transcript_bytes, rep.leak_bits, rep.keys_match
    );
}
