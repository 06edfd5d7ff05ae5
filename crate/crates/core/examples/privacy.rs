//! Privacy amplification: key-length budget and the streaming Toeplitz hash.

use rand::Rng;

use cvqkd::privacy::{final_key_length, toeplitz_hash, ToeplitzHasher};
use cvqkd::rng::substream;

fn main() {
    let n = 500_000u64;
    let leak = 250_000;
    let plan = final_key_length(n, 0.8, 0.334, 0.244, leak, 64);
    println!("{plan:#?}");

    let mut rng = substream(5, 0);
    let key: Vec<u8> = (0..n).map(|_| rng.gen::<u8>() & 1).collect();
    let out = plan.l_out as usize;
    let whole = toeplitz_hash(&key, 99, out).unwrap();
    let mut h = ToeplitzHasher::new(99, key.len(), out).unwrap();
    for chunk in key.chunks(65_537) {
        h.absorb(chunk).unwrap();
    }
    let streamed = h.finish().unwrap();
    let ones = whole.iter().filter(|&&b| b == 1).count();
    println!(
        "{} -> {} bits, ones {:.4}, streamed equal {}",
        key.len(),
        out,
        ones as f64 / out as f64,
        whole == streamed
    );
}
