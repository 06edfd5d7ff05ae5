//! One reverse-reconciliation block: Bob's syndrome and tag, Alice's
//! sum-product decode over a binary symmetric channel.
//!
//!     cargo run --release --example reconcile -- [n] [rate] [crossover]

use rand::Rng;

use cvqkd::reconciliation::{
    build_code, compute_syndrome, decode, verification_tag, SumProductDecoder,
};
use cvqkd::rng::substream;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(20_000, |s| s.parse().unwrap());
    let rate: f64 = args.next().map_or(0.51, |s| s.parse().unwrap());
    let p: f64 = args.next().map_or(0.07, |s| s.parse().unwrap());

    let h = build_code(n, rate, 1).expect("code");
    println!(
        "H: {} x {}, {} edges, design rate {:.4}, 4-cycle free {}",
        h.m(),
        h.n(),
        h.num_edges(),
        h.design_rate(),
        h.is_four_cycle_free()
    );
    let decoder = SumProductDecoder::new(&h);

    let mut rng = substream(2, 0);
    let bob: Vec<u8> = (0..n).map(|_| rng.gen::<u8>() & 1).collect();
    let alice: Vec<u8> = bob
        .iter()
        .map(|&b| b ^ u8::from(rng.gen::<f64>() < p))
        .collect();
    let flips = bob.iter().zip(&alice).filter(|(a, b)| a != b).count();

    let syndrome = compute_syndrome(&bob, &h).unwrap();
    let tag_seed = rng.gen();
    let r = decode(
        &decoder,
        &alice,
        &syndrome,
        p,
        200,
        verification_tag(&bob, tag_seed),
        tag_seed,
    )
    .unwrap();
    println!(
        "{flips} flipped bits; converged {} after {} iterations, tag match {}",
        r.converged, r.iterations, r.tag_match
    );
    println!(
        "equal to Bob: {}, leaked {} bits",
        r.corrected == bob,
        r.leaked_bits
    );
}
