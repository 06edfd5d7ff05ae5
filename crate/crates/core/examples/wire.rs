//! Framing of the classical messages and replay of a session transcript.

use cvqkd::protocol::{run_session, split_frames, validate_transcript, Message, SessionConfig};

fn hex(b: &[u8]) -> String {
    b.iter()
        .map(|x| format!("{x:02x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() {
    let msgs = [
        Message::AcceptSet {
            slots: vec![3, 17, 40],
        },
        Message::PhaseReveal {
            phases: vec![0, 1, 1],
        },
        Message::VerifyTag {
            block: 0,
            tag_seed: 7,
            tag: 0xdead_beef,
        },
    ];
    let mut stream = Vec::new();
    for m in &msgs {
        let f = m.encode();
        println!("{:<13} {}", m.kind().name(), hex(&f));
        stream.extend_from_slice(&f);
    }
    let frames = split_frames(&stream).unwrap();
    assert!(frames
        .iter()
        .zip(&msgs)
        .all(|(f, m)| &Message::decode(f).unwrap() == m));

    let mut config = SessionConfig::ideal();
    config.slots = 20_000;
    let r = run_session(&config).unwrap();
    for e in r.transcript.entries.iter().take(12) {
        let m = Message::decode(&e.frame).unwrap();
        println!(
            "{:>5} {:<13} {} bytes",
            e.from.name(),
            m.kind().name(),
            e.frame.len()
        );
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&validate_transcript(&r.transcript).unwrap()).unwrap()
    );
}
