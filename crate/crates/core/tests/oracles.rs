//! Closed forms checked against independent numerics.

use cvqkd::math::{binary_entropy as h2, gaussian_tail as q_function};
use cvqkd::privacy::{toeplitz_hash, ToeplitzHasher};
use cvqkd::protocol::SessionConfig;
use cvqkd::security::{
    acceptance_and_error, evaluate, mutual_info_post_selected, BeamsplitterAttack,
};

/// Composite Simpson rule.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn gauss(mu: f64, sigma: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp()
            / (sigma * (2.0 * std::f64::consts::PI).sqrt())
    }
}

#[test]
fn q_function_matches_quadrature() {
    for x in [-3.0, -1.0, 0.0, 0.3, 1.0, 2.5, 4.0] {
        let num = simpson(gauss(0.0, 1.0), x, 12.0, 20_000);
        assert!((q_function(x) - num).abs() < 1e-10, "Q({x})");
    }
}

#[test]
fn acceptance_matches_quadrature() {
    for (mu, t, sigma) in [
        (0.5215, 1.0588, 1.0),
        (0.5215, 1.0588, 1.0714f64.sqrt()),
        (1.3, 0.4, 0.9),
        (0.1, 2.0, 1.4),
    ] {
        let g = gauss(mu, sigma);
        let right = simpson(&g, t, mu + 14.0 * sigma, 40_000);
        let left = simpson(&g, -t - 14.0 * sigma, -t, 40_000);
        let (p, e) = acceptance_and_error(mu, t, sigma).unwrap();
        assert!((p - (left + right)).abs() < 1e-10);
        assert!((e - left / (left + right)).abs() < 1e-9);
    }
}

#[test]
fn operating_point_values() {
    let (p, e) = acceptance_and_error(0.5215, 1.0588, 1.0).unwrap();
    assert!((p - 0.3526).abs() < 1e-4, "{p}");
    assert!((e - 0.162).abs() < 5e-4, "{e}");
    let op = SessionConfig::paper_24km().operating_point();
    let rep = evaluate(&op, &BeamsplitterAttack, 0.01, 2e6).unwrap();
    assert!((rep.p_acc - 0.36527).abs() < 1e-4);
    assert!((rep.error_rate - 0.17359).abs() < 1e-4);
    assert!((rep.i_ab - (1.0 - h2(rep.error_rate))).abs() < 1e-12);
}

#[test]
fn binary_entropy_and_mutual_information() {
    assert_eq!(h2(0.0), 0.0);
    assert!((h2(0.5) - 1.0).abs() < 1e-15);
    assert!((h2(0.07) - 0.365_923_650_035).abs() < 1e-9);
    assert!((mutual_info_post_selected(0.07) - (1.0 - h2(0.07))).abs() < 1e-15);
}

#[test]
fn toeplitz_hash_is_a_toeplitz_matrix() {
    let (n, l, seed) = (97, 41, 1234);
    let column = |j: usize| {
        let mut e = vec![0u8; n];
        e[j] = 1;
        toeplitz_hash(&e, seed, l).unwrap()
    };
    let cols: Vec<Vec<u8>> = (0..n).map(column).collect();
    for j in 0..n - 1 {
        for i in 0..l - 1 {
            assert_eq!(cols[j][i], cols[j + 1][i + 1], "T[{i}][{j}]");
        }
    }
    let x: Vec<u8> = (0..n).map(|i| ((i * 7 + 3) % 5 == 0) as u8).collect();
    let mut dense = vec![0u8; l];
    for (j, &b) in x.iter().enumerate() {
        if b == 1 {
            for i in 0..l {
                dense[i] ^= cols[j][i];
            }
        }
    }
    assert_eq!(toeplitz_hash(&x, seed, l).unwrap(), dense);
    let mut h = ToeplitzHasher::new(seed, n, l).unwrap();
    for chunk in x.chunks(13) {
        h.absorb(chunk).unwrap();
    }
    assert_eq!(h.finish().unwrap(), dense);
}
