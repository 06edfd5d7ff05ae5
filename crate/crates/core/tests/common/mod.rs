//! Invariants shared by `properties` (one test each) and `acceptance`
//! (all of them, timed).
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use cvqkd::bits::{pack, unpack};
use cvqkd::channel::{
    run_batch_with_workers, sample_slot, ChannelParams, LoPhase, SlotSetting, Symbol,
};
use cvqkd::privacy::{final_key_length, toeplitz_hash};
use cvqkd::protocol::{
    alice_project, physical_layer, run_session, sign_bit, validate_transcript, Message,
    SessionConfig,
};
use cvqkd::reconciliation::{
    build_code, compute_syndrome, decode, verification_tag, ParityCheckMatrix, SumProductDecoder,
    TAG_BITS,
};
use cvqkd::rng::substream;
use cvqkd::security::{
    acceptance_and_error, entropy_of_mixture, evaluate, fock, holevo_bound,
    mutual_info_post_selected, qpsk_constellation, BeamsplitterAttack, OperatingPoint, DATA_PHASES,
};
use cvqkd::tomography::{reconstruct_gaussian_state, QuadratureFit, TomographyReport};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};

pub type Check = fn() -> Result<(), String>;

/// Every invariant, by name.
pub const PROPERTIES: &[(&str, Check)] = &[
    (
        "channel_variance_independent_of_symbol",
        channel_variance_independent_of_symbol,
    ),
    ("channel_phase_covariance", channel_phase_covariance),
    ("channel_amplitude_scaling", channel_amplitude_scaling),
    ("channel_worker_independence", channel_worker_independence),
    (
        "tomography_exact_covariance_solve",
        tomography_exact_covariance_solve,
    ),
    (
        "tomography_centrosymmetric_means",
        tomography_centrosymmetric_means,
    ),
    (
        "tomography_rotation_invariance",
        tomography_rotation_invariance,
    ),
    ("security_report_bounds", security_report_bounds),
    ("security_gram_matches_fock", security_gram_matches_fock),
    (
        "security_threshold_monotonicity",
        security_threshold_monotonicity,
    ),
    (
        "security_margin_nonincreasing_in_excess_noise",
        security_margin_nonincreasing_in_excess_noise,
    ),
    ("security_report_determinism", security_report_determinism),
    (
        "reconciliation_code_structure",
        reconciliation_code_structure,
    ),
    (
        "reconciliation_zero_error_channel",
        reconciliation_zero_error_channel,
    ),
    (
        "reconciliation_coset_linearity",
        reconciliation_coset_linearity,
    ),
    (
        "reconciliation_leakage_accounting",
        reconciliation_leakage_accounting,
    ),
    (
        "reconciliation_verified_blocks_match",
        reconciliation_verified_blocks_match,
    ),
    ("privacy_gf2_linearity", privacy_gf2_linearity),
    ("privacy_determinism", privacy_determinism),
    ("privacy_output_uniformity", privacy_output_uniformity),
    ("privacy_length_bounds", privacy_length_bounds),
    ("protocol_wire_roundtrip", protocol_wire_roundtrip),
    ("protocol_session_invariants", protocol_session_invariants),
    (
        "protocol_transcript_determinism",
        protocol_transcript_determinism,
    ),
    ("bits_pack_roundtrip", bits_pack_roundtrip),
];

pub fn run_named(name: &str) -> Result<(), String> {
    let (_, f) = PROPERTIES
        .iter()
        .find(|(n, _)| *n == name)
        .expect("known property");
    f()
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn link_params() -> ChannelParams {
    SessionConfig::paper_24km().channel
}

pub fn link_amplitude() -> f64 {
    SessionConfig::paper_24km().amplitude()
}

/// `n` outcomes for one symbol and phase, slot ids `first..first + n`.
pub fn samples(
    symbol: Symbol,
    phase: f64,
    r: f64,
    params: &ChannelParams,
    seed: u64,
    first: u64,
    n: usize,
) -> Vec<f64> {
    (0..n as u64)
        .into_par_iter()
        .map(|k| sample_slot(symbol.amplitude(r), phase, params, seed, first + k))
        .collect()
}

pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (
        m,
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0),
    )
}

fn channel_variance_independent_of_symbol() -> Result<(), String> {
    let params = link_params();
    let r = link_amplitude();
    let n = 250_000;
    let vars: Vec<f64> = Symbol::ALL
        .iter()
        .enumerate()
        .map(|(i, &s)| mean_var(&samples(s, 0.0, r, &params, 71, i as u64 * n as u64, n)).1)
        .collect();
    let f = FisherSnedecor::new((n - 1) as f64, (n - 1) as f64).unwrap();
    for k in 1..4 {
        let ratio = vars[k] / vars[0];
        let c = f.cdf(ratio);
        let p = 2.0 * c.min(1.0 - c);
        ensure(p >= 0.01, || {
            format!("F-test symbol {} vs 1: ratio {ratio}, p = {p}", k + 1)
        })?;
    }
    Ok(())
}

fn channel_phase_covariance() -> Result<(), String> {
    let params = link_params();
    let r = 1.0;
    let n = 200_000;
    for (i, &s) in Symbol::ALL.iter().enumerate() {
        let base = i as u64 * 3 * n as u64;
        let (m0, v) = mean_var(&samples(s, 0.0, r, &params, 72, base, n));
        let (m45, _) = mean_var(&samples(s, FRAC_PI_4, r, &params, 72, base + n as u64, n));
        let (m90, _) = mean_var(&samples(
            s,
            FRAC_PI_2,
            r,
            &params,
            72,
            base + 2 * n as u64,
            n,
        ));
        let se = (v / n as f64).sqrt() * 2f64.sqrt();
        let d = m45 - (m0 + m90) / SQRT_2;
        ensure(d.abs() < 3.0 * se, || {
            format!("symbol {}: residual {d}, 3 SE = {}", s.index(), 3.0 * se)
        })?;
    }
    Ok(())
}

fn channel_amplitude_scaling() -> Result<(), String> {
    let params = link_params();
    let n = 200_000;
    for (i, &s) in Symbol::ALL.iter().enumerate() {
        let (m1, v1) = mean_var(&samples(
            s,
            0.0,
            0.7,
            &params,
            73,
            2 * i as u64 * n as u64,
            n,
        ));
        let (m2, v2) = mean_var(&samples(
            s,
            0.0,
            1.4,
            &params,
            73,
            (2 * i as u64 + 1) * n as u64,
            n,
        ));
        let se_m = (v1 / n as f64).sqrt() * 5f64.sqrt();
        ensure((m2 - 2.0 * m1).abs() < 3.0 * se_m, || {
            format!("mean {m2} vs 2 x {m1}")
        })?;
        let se_v = v1 * (2.0 / n as f64).sqrt() * SQRT_2;
        ensure((v2 - v1).abs() < 3.0 * se_v, || {
            format!("variance {v2} vs {v1}")
        })?;
    }
    Ok(())
}

fn channel_worker_independence() -> Result<(), String> {
    check(
        16,
        (any::<u64>(), 1usize..5, 0u64..1_000_000),
        |(seed, workers, first)| {
            let mut rng = substream(seed, 9);
            let symbols: Vec<Symbol> = (0..600).map(|_| Symbol::random(&mut rng)).collect();
            let settings: Vec<SlotSetting> = (0..600)
                .map(|_| SlotSetting::random(0.3, &mut rng))
                .collect();
            let p = link_params();
            let a = run_batch_with_workers(&symbols, &settings, 0.6, &p, seed, first, 1).unwrap();
            let b =
                run_batch_with_workers(&symbols, &settings, 0.6, &p, seed, first, workers).unwrap();
            prop_assert_eq!(a, b);
            Ok(())
        },
    )
}

fn fit(mean: f64, variance: f64) -> QuadratureFit {
    QuadratureFit {
        mean,
        variance,
        n: 1000,
        goodness: None,
        degenerate: false,
    }
}

fn tomography_exact_covariance_solve() -> Result<(), String> {
    check(
        256,
        (
            0.2f64..4.0,
            0.2f64..4.0,
            0.2f64..4.0,
            -2.0f64..2.0,
            -2.0f64..2.0,
        ),
        |(v0, v45, v90, a, b)| {
            let fits = [fit(a, v0), fit((a + b) / SQRT_2, v45), fit(b, v90)];
            let s = reconstruct_gaussian_state(Symbol::ALL[0], [&fits[0], &fits[1], &fits[2]], 0.0);
            for (f, phase) in fits.iter().zip(LoPhase::TOMOGRAPHY) {
                prop_assert!((s.variance_at(phase.radians()) - f.variance).abs() < 1e-12);
            }
            prop_assert_eq!(s.covariance[0][1], s.covariance[1][0]);
            prop_assert!(s.residual.abs() < 1e-12);
            Ok(())
        },
    )
}

/// Tomography report from `per_cell` samples in each of the twelve cells.
pub fn simulated_tomography(
    params: &ChannelParams,
    r: f64,
    per_cell: usize,
    seed: u64,
) -> TomographyReport {
    let mut cells = BTreeMap::new();
    let mut first = 0u64;
    for &s in &Symbol::ALL {
        for &p in &LoPhase::TOMOGRAPHY {
            cells.insert(
                (s, p),
                samples(s, p.radians(), r, params, seed, first, per_cell),
            );
            first += per_cell as u64;
        }
    }
    TomographyReport::from_cells(&cells, params.electronic_noise).unwrap()
}

fn tomography_centrosymmetric_means() -> Result<(), String> {
    let params = link_params();
    let n = 50_000;
    let rep = simulated_tomography(&params, link_amplitude(), n, 74);
    let se = (params.noise_variance() / n as f64).sqrt() * SQRT_2;
    for st in &rep.states {
        let anti = &rep.states[(st.symbol.antipodal().index() - 1) as usize];
        for k in 0..2 {
            let d = st.mean[k] + anti.mean[k];
            ensure(d.abs() < 3.0 * se, || {
                format!("symbol {} axis {k}: m_i + m_anti = {d}", st.symbol.index())
            })?;
        }
    }
    Ok(())
}

fn tomography_rotation_invariance() -> Result<(), String> {
    let n = 50_000;
    let p = link_params();
    let rotated = ChannelParams {
        phase_offset: 0.7,
        ..p
    };
    let a = simulated_tomography(&p, link_amplitude(), n, 75);
    let b = simulated_tomography(&rotated, link_amplitude(), n, 76);
    // per-symbol estimate averages two variances; four symbols
    let se = p.noise_variance() * (2.0 / n as f64).sqrt() / SQRT_2 / 2.0;
    let d = a.excess_noise.average - b.excess_noise.average;
    ensure(d.abs() < 3.0 * se * SQRT_2, || {
        format!(
            "excess noise {} vs {}",
            a.excess_noise.average, b.excess_noise.average
        )
    })?;
    let moved = (a.states[0].mean[0] - b.states[0].mean[0]).abs();
    ensure(moved > 0.05, || {
        format!("rotation did not move the means ({moved})")
    })
}

fn operating_point() -> impl Strategy<Value = OperatingPoint> {
    (
        0.02f64..1.0,
        0.05f64..2.5,
        0.0f64..2.5,
        0.0f64..0.1,
        0.0f64..0.06,
        0.5f64..1.0,
        0.0f64..0.5,
    )
        .prop_map(|(eta, r, t, v_el, eps, beta, p_tomo)| OperatingPoint {
            mu: 2.0 * eta.sqrt() * r,
            threshold: t,
            noise_variance: 1.0 + v_el + eps,
            excess_noise: eps,
            total_transmission: eta,
            amplitude: r,
            beta,
            p_tomo,
        })
}

fn security_report_bounds() -> Result<(), String> {
    check(200, operating_point(), |op| {
        let rep = evaluate(&op, &BeamsplitterAttack, 0.01, 2e6).unwrap();
        prop_assert!((0.0..=1.0).contains(&rep.p_acc));
        prop_assert!((0.0..=0.5).contains(&rep.error_rate));
        prop_assert!(rep.i_ab <= 1.0 && rep.i_ab >= 0.0);
        prop_assert!(
            rep.chi_be >= 0.0 && rep.chi_be <= 2.0,
            "chi = {}",
            rep.chi_be
        );
        let h = holevo_bound(
            &op,
            &qpsk_constellation(op.amplitude),
            &DATA_PHASES,
            &BeamsplitterAttack,
        )
        .unwrap();
        for ph in &h.per_phase {
            prop_assert!(
                ph.chi <= ph.eve_entropy + 1e-9,
                "chi {} > S(rho_E) {}",
                ph.chi,
                ph.eve_entropy
            );
        }
        prop_assert!(rep.chi_be <= rep.eve_entropy + 1e-9);
        Ok(())
    })
}

fn small_amplitude() -> impl Strategy<Value = Complex64> {
    (0.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(m, a)| Complex64::from_polar(m, a))
}

fn security_gram_matches_fock() -> Result<(), String> {
    check(
        100,
        (
            prop::collection::vec(small_amplitude(), 1..6),
            prop::collection::vec(0.05f64..1.0, 6),
        ),
        |(amps, w)| {
            let w = &w[..amps.len()];
            let total: f64 = w.iter().sum();
            let weights: Vec<f64> = w.iter().map(|x| x / total).collect();
            let g = entropy_of_mixture(&weights, &amps).unwrap();
            let f = fock::entropy_of_mixture(&weights, &amps).unwrap();
            prop_assert!(
                (g - f.entropy).abs() < 1e-6,
                "gram {} fock {}",
                g,
                f.entropy
            );
            Ok(())
        },
    )
}

fn security_threshold_monotonicity() -> Result<(), String> {
    check(
        500,
        (0.01f64..3.0, 0.5f64..2.0, 0.0f64..3.0, 1e-3f64..1.0),
        |(mu, sigma, t1, dt)| {
            let t2 = t1 + dt;
            let (p1, e1) = acceptance_and_error(mu, t1, sigma).unwrap();
            let (p2, e2) = acceptance_and_error(mu, t2, sigma).unwrap();
            prop_assert!(p2 < p1, "p_acc {} -> {}", p1, p2);
            prop_assert!(e2 <= e1 + 1e-12, "e {} -> {}", e1, e2);
            prop_assert!(mutual_info_post_selected(e2) >= mutual_info_post_selected(e1) - 1e-12);
            Ok(())
        },
    )
}

fn security_margin_nonincreasing_in_excess_noise() -> Result<(), String> {
    let bases = [
        SessionConfig::paper_24km().operating_point(),
        SessionConfig::paper_derived().operating_point(),
        SessionConfig::ideal().operating_point(),
    ];
    for base in bases {
        let mut prev = f64::INFINITY;
        for k in 0..=100 {
            let op = OperatingPoint {
                excess_noise: 0.001 * k as f64,
                ..base
            };
            let m = evaluate(&op, &BeamsplitterAttack, f64::INFINITY, 1.0)
                .unwrap()
                .delta_i_use;
            ensure(m <= prev + 1e-12, || {
                format!(
                    "margin rose from {prev} to {m} at excess {}",
                    op.excess_noise
                )
            })?;
            prev = m;
        }
    }
    Ok(())
}

fn security_report_determinism() -> Result<(), String> {
    check(50, operating_point(), |op| {
        let a =
            serde_json::to_string(&evaluate(&op, &BeamsplitterAttack, 0.01, 2e6).unwrap()).unwrap();
        let b =
            serde_json::to_string(&evaluate(&op, &BeamsplitterAttack, 0.01, 2e6).unwrap()).unwrap();
        prop_assert_eq!(a, b);
        Ok(())
    })
}

fn reconciliation_code_structure() -> Result<(), String> {
    check(
        12,
        (1000usize..3000, 0.2f64..0.8, any::<u64>()),
        |(n, rate, seed)| {
            let h = build_code(n, rate, seed).unwrap();
            prop_assert!(h.design_rate() > 0.0 && h.design_rate() < 1.0);
            for col in h.columns() {
                prop_assert!(
                    col.windows(2).all(|w| w[0] < w[1]),
                    "duplicate or unsorted edge"
                );
            }
            prop_assert!(h.is_four_cycle_free());
            prop_assert_eq!(h.rows().iter().map(Vec::len).sum::<usize>(), h.num_edges());
            Ok(())
        },
    )
}

fn shared_code() -> &'static (ParityCheckMatrix, SumProductDecoder) {
    static CODE: std::sync::OnceLock<(ParityCheckMatrix, SumProductDecoder)> =
        std::sync::OnceLock::new();
    CODE.get_or_init(|| {
        let h = build_code(2000, 0.51, 17).unwrap();
        let d = SumProductDecoder::new(&h);
        (h, d)
    })
}

fn bits(n: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, n)
}

fn noisy(bits: &[u8], p: f64, seed: u64) -> Vec<u8> {
    let mut rng = substream(seed, 3);
    bits.iter()
        .map(|&b| b ^ u8::from(rng.gen::<f64>() < p))
        .collect()
}

fn reconciliation_zero_error_channel() -> Result<(), String> {
    let (h, d) = shared_code();
    check(40, bits(2000), |x| {
        let s = compute_syndrome(&x, h).unwrap();
        let r = decode(d, &x, &s, 0.07, 200, verification_tag(&x, 5), 5).unwrap();
        prop_assert!(r.converged && r.tag_match);
        prop_assert_eq!(r.corrected, x);
        Ok(())
    })
}

fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

fn reconciliation_coset_linearity() -> Result<(), String> {
    let (h, d) = shared_code();
    check(
        30,
        (bits(2000), bits(2000), any::<u64>(), 0.02f64..0.12),
        |(bob, c, seed, p)| {
            let alice = noisy(&bob, p, seed);
            let s = compute_syndrome(&bob, h).unwrap();
            let hc = compute_syndrome(&c, h).unwrap();
            let a = d.decode(&alice, &s, p, 200);
            let b = d.decode(&xor(&alice, &c), &xor(&s, &hc), p, 200);
            prop_assert_eq!(a.converged, b.converged);
            prop_assert_eq!(a.iterations, b.iterations);
            prop_assert_eq!(xor(&a.bits, &c), b.bits);
            Ok(())
        },
    )
}

fn reconciliation_leakage_accounting() -> Result<(), String> {
    let (h, d) = shared_code();
    check(20, (bits(2000), any::<u64>()), |(bob, seed)| {
        let s = compute_syndrome(&bob, h).unwrap();
        let r = decode(
            d,
            &noisy(&bob, 0.05, seed),
            &s,
            0.05,
            200,
            verification_tag(&bob, seed),
            seed,
        )
        .unwrap();
        prop_assert_eq!(r.leaked_bits, h.m() + TAG_BITS);
        prop_assert_eq!(r.syndrome_bits, h.m());
        Ok(())
    })
}

fn reconciliation_verified_blocks_match() -> Result<(), String> {
    let (h, d) = shared_code();
    let bad = (0..10_000u64)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = substream(0xb10c, t);
            let bob: Vec<u8> = (0..2000).map(|_| rng.gen::<u8>() & 1).collect();
            let alice = noisy(&bob, 0.07, t);
            let s = compute_syndrome(&bob, h).unwrap();
            let tag_seed = rng.gen();
            let r = decode(
                d,
                &alice,
                &s,
                0.07,
                200,
                verification_tag(&bob, tag_seed),
                tag_seed,
            )
            .unwrap();
            r.accepted() && r.corrected != bob
        })
        .count();
    ensure(bad == 0, || {
        format!("{bad} verified blocks differ from Bob's")
    })
}

fn privacy_gf2_linearity() -> Result<(), String> {
    check(
        50,
        (bits(3000), bits(3000), any::<u64>(), 1usize..3000),
        |(a, b, seed, l)| {
            let ha = toeplitz_hash(&a, seed, l).unwrap();
            let hb = toeplitz_hash(&b, seed, l).unwrap();
            prop_assert_eq!(toeplitz_hash(&xor(&a, &b), seed, l).unwrap(), xor(&ha, &hb));
            Ok(())
        },
    )
}

fn privacy_determinism() -> Result<(), String> {
    check(
        50,
        (bits(2500), any::<u64>(), 1usize..2500),
        |(a, seed, l)| {
            prop_assert_eq!(
                toeplitz_hash(&a, seed, l).unwrap(),
                toeplitz_hash(&a, seed, l).unwrap()
            );
            Ok(())
        },
    )
}

/// Two-sided p-values of the monobit and Wald-Wolfowitz runs tests.
pub fn monobit_and_runs(bits: &[u8]) -> (f64, f64) {
    let n = bits.len() as f64;
    let ones = bits.iter().filter(|&&b| b == 1).count() as f64;
    let norm = Normal::new(0.0, 1.0).unwrap();
    let s = (2.0 * ones - n) / n.sqrt();
    let p_mono = 2.0 * (1.0 - norm.cdf(s.abs()));
    let pi = ones / n;
    let runs = 1.0 + bits.windows(2).filter(|w| w[0] != w[1]).count() as f64;
    let z = (runs - 2.0 * n * pi * (1.0 - pi)) / (2.0 * n.sqrt() * pi * (1.0 - pi));
    let p_runs = 2.0 * (1.0 - norm.cdf(z.abs()));
    (p_mono, p_runs)
}

fn privacy_output_uniformity() -> Result<(), String> {
    let mut rng = substream(0xb1a5, 0);
    let input: Vec<u8> = (0..200_000)
        .map(|_| u8::from(rng.gen::<f64>() < 0.45))
        .collect();
    let (p_in, _) = monobit_and_runs(&input);
    ensure(p_in < 1e-6, || "input is not visibly biased".into())?;
    let key = toeplitz_hash(&input, 99, 100_000).unwrap();
    let (p_mono, p_runs) = monobit_and_runs(&key);
    ensure(p_mono >= 0.01 && p_runs >= 0.01, || {
        format!("monobit p = {p_mono}, runs p = {p_runs}")
    })
}

fn privacy_length_bounds() -> Result<(), String> {
    check(
        500,
        (
            0u64..10_000_000,
            0.5f64..1.0,
            0.0f64..1.0,
            0.0f64..1.0,
            0u64..10_000_000,
            0u64..200,
        ),
        |(n, beta, i, chi, leak, s)| {
            let plan = final_key_length(n, beta, i, chi, leak.min(n), s);
            prop_assert!(plan.l_out <= n);
            let shared = (n as f64 * beta * i).min(n as f64 - leak.min(n) as f64);
            let expected = (shared - (n as f64 * chi).ceil() - s as f64)
                .floor()
                .max(0.0);
            prop_assert!(
                (plan.l_out as f64 - expected).abs() <= 1.0,
                "{} vs {}",
                plan.l_out,
                expected
            );
            Ok(())
        },
    )
}

fn message() -> impl Strategy<Value = Message> {
    let symbol = (1u8..5).prop_map(|i| Symbol::new(i).unwrap());
    prop_oneof![
        bits(37).prop_map(|tomography| Message::SlotRoles { tomography }),
        prop::collection::vec(any::<u64>(), 0..40).prop_map(|slots| Message::AcceptSet { slots }),
        prop::collection::vec((any::<u64>(), symbol), 0..40)
            .prop_map(|entries| Message::TomoDisclose { entries }),
        prop::collection::vec(0u8..2, 0..100).prop_map(|phases| Message::PhaseReveal { phases }),
        (
            any::<u32>(),
            any::<u32>(),
            any::<u64>(),
            0.0f64..0.5,
            prop::collection::vec(0u8..2, 0..300)
        )
            .prop_map(|(block, blocks, code_seed, crossover, syndrome)| {
                Message::Syndrome {
                    block,
                    blocks,
                    n: 4000,
                    m: syndrome.len() as u32,
                    code_seed,
                    crossover,
                    syndrome,
                }
            }),
        (any::<u32>(), any::<u64>(), any::<u64>()).prop_map(|(block, tag_seed, tag)| {
            Message::VerifyTag {
                block,
                tag_seed,
                tag,
            }
        }),
        (any::<u64>(), any::<u64>(), any::<u64>())
            .prop_map(|(seed, n_in, l_out)| Message::PaSeed { seed, n_in, l_out }),
    ]
}

fn protocol_wire_roundtrip() -> Result<(), String> {
    check(300, message(), |m| {
        let f = m.encode();
        prop_assert_eq!(Message::decode(&f).unwrap(), m);
        let mut bad = f.clone();
        bad[0] = 0;
        prop_assert!(Message::decode(&bad).is_err());
        Ok(())
    })
}

/// Small session with randomizable seed.
pub fn small_config(seed: u64) -> SessionConfig {
    let mut c = SessionConfig::ideal();
    c.slots = 40_000;
    c.set_seed(seed);
    c
}

fn protocol_session_invariants() -> Result<(), String> {
    let mut configs = vec![small_config(1), small_config(2)];
    let mut lossy = SessionConfig::paper_24km();
    lossy.slots = 300_000;
    lossy.set_seed(3);
    configs.push(lossy);
    for c in configs {
        let r = run_session(&c).map_err(|e| e.to_string())?;
        let rep = &r.report;
        ensure(rep.lengths.is_non_increasing(), || {
            format!("stage lengths {:?}", rep.lengths)
        })?;
        let summary = validate_transcript(&r.transcript).map_err(|e| e.to_string())?;
        ensure(summary.leak_bits == rep.leak_bits, || {
            format!("leak {} vs {}", summary.leak_bits, rep.leak_bits)
        })?;
        if rep.outcome.abort().is_none() {
            ensure(
                r.keys.alice_key == r.keys.bob_key && !r.keys.bob_key.is_empty(),
                || "keys differ".into(),
            )?;
        }
        // projection rule, from the transcript's accept set and phases
        let (alice, _) = physical_layer(&c, 1).map_err(|e| e.to_string())?;
        let mut accepted = Vec::new();
        let mut phases = Vec::new();
        for e in &r.transcript.entries {
            match Message::decode(&e.frame).unwrap() {
                Message::AcceptSet { slots } => accepted = slots,
                Message::PhaseReveal { phases: p } => phases = p,
                _ => {}
            }
        }
        if !phases.is_empty() {
            for (k, (&slot, &ph)) in accepted.iter().zip(&phases).enumerate() {
                let phase = if ph == 1 {
                    LoPhase::HalfPi
                } else {
                    LoPhase::Zero
                };
                let expect = sign_bit(alice_project(alice.symbols[slot as usize], phase).unwrap());
                ensure(r.keys.alice_projected[k] == expect, || {
                    format!("projection of slot {slot}")
                })?;
            }
        }
    }
    Ok(())
}

fn protocol_transcript_determinism() -> Result<(), String> {
    let c = small_config(11);
    let a = run_session(&c).map_err(|e| e.to_string())?;
    let b = run_session(&c).map_err(|e| e.to_string())?;
    ensure(a.transcript.to_bytes() == b.transcript.to_bytes(), || {
        "transcripts differ".into()
    })?;
    ensure(a.log.to_json_lines() == b.log.to_json_lines(), || {
        "logs differ".into()
    })?;
    ensure(a.report == b.report, || "reports differ".into())
}

fn bits_pack_roundtrip() -> Result<(), String> {
    check(200, prop::collection::vec(0u8..2, 0..500), |b| {
        prop_assert_eq!(unpack(&pack(&b), b.len()).unwrap(), b);
        Ok(())
    })
}
