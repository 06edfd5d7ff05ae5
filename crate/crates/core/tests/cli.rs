use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv: Vec<String> = std::iter::once("cvqkd")
        .chain(args.iter().copied())
        .map(String::from)
        .collect();
    let code = cvqkd::cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("cvqkd-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        Value::String(s) => {
            out.insert(prefix.to_string(), s.clone());
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

#[test]
fn missing_config_is_a_usage_error_without_outputs() {
    let dir = scratch("missing");
    let (code, _, err) = run(&[
        "simulate",
        "--config",
        "/nonexistent/cvqkd.conf",
        "-o",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
    assert!(!dir.exists());
}

#[test]
fn unknown_subcommand_and_bad_set_are_usage_errors() {
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(
        run(&[
            "keyrate",
            "--preset",
            "paper-24km",
            "--set",
            "no_such_key=1"
        ])
        .0,
        2
    );
    assert_eq!(run(&["keyrate", "--preset", "nowhere"]).0, 2);
}

#[test]
fn keyrate_reports_rate_and_aborts_on_excess_noise() {
    let (code, out, _) = run(&["keyrate", "--preset", "paper-24km"]);
    assert_eq!(code, 0);
    assert!(out.contains("bits_per_sec"));
    let (code, out, _) = run(&[
        "--json",
        "keyrate",
        "--preset",
        "paper-24km",
        "--set",
        "excess_noise=0.05",
    ]);
    assert_eq!(code, 10);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"]["verdict"], "abort");
}

#[test]
fn json_and_text_carry_the_same_content() {
    let (_, text, _) = run(&["keyrate", "--preset", "paper-24km"]);
    let (_, json, _) = run(&["--json", "keyrate", "--preset", "paper-24km"]);
    let mut flat = BTreeMap::new();
    flatten("", &serde_json::from_str(&json).unwrap(), &mut flat);
    let lines: BTreeMap<String, String> = text
        .lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    assert_eq!(flat, lines);
}

#[test]
fn simulate_is_reproducible_under_seed() {
    let a = scratch("seed-a");
    let b = scratch("seed-b");
    let c = scratch("seed-c");
    for (dir, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let (code, _, err) = run(&[
            "--seed",
            seed,
            "simulate",
            "--preset",
            "ideal",
            "--set",
            "slots=20000",
            "-o",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
    }
    let read = |d: &PathBuf, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(&a, "report.json"), read(&b, "report.json"));
    assert_eq!(read(&a, "transcript.bin"), read(&b, "transcript.bin"));
    assert_eq!(read(&a, "bob.key"), read(&a, "alice.key"));
    assert_ne!(read(&a, "transcript.bin"), read(&c, "transcript.bin"));
    for d in [a, b, c] {
        let _ = std::fs::remove_dir_all(d);
    }
}

#[test]
fn simulate_exit_code_follows_abort_stage() {
    let dir = scratch("abort");
    let (code, _, _) = run(&[
        "simulate",
        "--preset",
        "ideal",
        "--set",
        "slots=20000",
        "--set",
        "excess_noise=0.3",
        "-o",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 10);
    assert!(dir.join("report.json").exists());
    assert!(!dir.join("bob.key").exists());
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn sweep_writes_csv_with_header() {
    let dir = scratch("sweep");
    let path = dir.join("sweep.csv");
    std::fs::create_dir_all(&dir).unwrap();
    let (code, _, err) = run(&[
        "sweep",
        "--preset",
        "paper-24km",
        "--from",
        "0",
        "--to",
        "2",
        "--steps",
        "21",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("T,p_acc,e,I_AB,chi_BE,dI_use,bits_per_sec"));
    assert_eq!(csv.lines().count(), 22);
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn reconcile_bench_small() {
    let (code, out, _) = run(&["--json", "reconcile-bench", "--n", "2000", "--trials", "20"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["undetected_errors"], 0);
}

#[test]
fn tomo_fit_round_trips_simulated_records() {
    let dir = scratch("tomo");
    let (code, _, _) = run(&[
        "simulate",
        "--preset",
        "ideal",
        "--set",
        "slots=20000",
        "-o",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let records = dir.join("tomography_records.csv");
    let (code, out, err) = run(&[
        "--json",
        "tomo-fit",
        records.to_str().unwrap(),
        "--electronic-noise",
        "0",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["states"].as_array().unwrap().len(), 4);
    let _ = std::fs::remove_dir_all(dir);
}
