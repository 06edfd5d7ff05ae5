//! Von Neumann entropy of coherent-state mixtures, Gram matrix against Fock
//! truncation, and Eve's Holevo information at the 24 km point.

use num_complex::Complex64;

use cvqkd::protocol::SessionConfig;
use cvqkd::security::{
    entropy_of_mixture, fock, holevo_bound, qpsk_constellation, BeamsplitterAttack, DATA_PHASES,
};

fn main() {
    println!("|a|    S_gram      S_fock      cutoff");
    for k in 1..=10 {
        let a = 0.15 * k as f64;
        let amps = qpsk_constellation(a);
        let w = [0.25; 4];
        let g = entropy_of_mixture(&w, &amps).unwrap();
        let f = fock::entropy_of_mixture(&w, &amps).unwrap();
        println!("{a:.2}   {g:.8}  {:.8}  {}", f.entropy, f.cutoff);
    }
    let b = 0.5;
    let two = entropy_of_mixture(
        &[0.5, 0.5],
        &[Complex64::new(b, 0.0), Complex64::new(-b, 0.0)],
    )
    .unwrap();
    println!("two states at +/-{b}: {two:.6} bits");

    let op = SessionConfig::paper_24km().operating_point();
    let h = holevo_bound(
        &op,
        &qpsk_constellation(op.amplitude),
        &DATA_PHASES,
        &BeamsplitterAttack,
    )
    .unwrap();
    println!("chi_BE {:.5}, S(rho_E) {:.5}", h.chi, h.eve_entropy);
    for p in &h.per_phase {
        println!("  phase {:.4}: chi {:.5}", p.phase, p.chi);
    }
}
