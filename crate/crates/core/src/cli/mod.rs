//! Command-line front end. Every command prints `key: value` lines, or the
//! same content as JSON with `--json`.

mod output;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bits::pack;
use crate::channel::{read_records_csv, write_records_csv, RecordRow, SlotRole};
use crate::privacy::KeyManifest;
use crate::protocol::{
    physical_layer, run_session, run_session_over, SessionConfig, SessionError, SessionResult,
    StreamTransport,
};
use crate::reconciliation::{benchmark, BenchParams, DEFAULT_MAX_ITER};
use crate::rng::{derive_seed, domain};
use crate::security::{
    evaluate, is_unimodal, sweep::argmax, sweep_threshold, write_sweep_csv, AbortReason,
    BeamsplitterAttack, Verdict,
};
use crate::tomography::{write_histogram_csv, TomographyReport};

pub use output::render;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cvqkd", version, about = "Post-selected QPSK CV-QKD simulator")]
pub struct Cli {
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigSource {
    /// `key = value` configuration file.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Bundled preset: paper-24km, paper-derived or ideal.
    #[arg(long)]
    pub preset: Option<String>,
    /// Extra `key=value` overrides applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportKind {
    /// Both parties in one thread.
    Memory,
    /// One thread per party over loopback TCP.
    Tcp,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Runs a full session and writes report, log, keys and tomography data.
    Simulate {
        #[command(flatten)]
        source: ConfigSource,
        /// Output directory.
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = TransportKind::Memory)]
        transport: TransportKind,
    },
    /// Closed-form key rate over a threshold grid.
    Sweep {
        #[command(flatten)]
        source: ConfigSource,
        /// Swept parameter; only `T` is supported.
        #[arg(long, default_value = "T")]
        param: String,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 2.5)]
        to: f64,
        #[arg(long, default_value_t = 251)]
        steps: usize,
        /// CSV destination (stdout when absent).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Fits conditional Gaussian states to a CSV of labelled records.
    TomoFit {
        /// CSV with columns slot_id,phase,value,role,symbol.
        input: PathBuf,
        /// Detector electronic noise, SNU.
        #[arg(long, default_value_t = 0.069)]
        electronic_noise: f64,
        /// JSON destination (stdout when absent).
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Histogram CSV destination.
        #[arg(long)]
        histograms: Option<PathBuf>,
    },
    /// LDPC frame-error benchmark on a binary symmetric channel.
    ReconcileBench {
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0.51)]
        rate: f64,
        /// Crossover probability.
        #[arg(long, short, default_value_t = 0.07)]
        p: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Closed-form security report for a configuration.
    Keyrate {
        #[command(flatten)]
        source: ConfigSource,
    },
}

/// Everything a run wrote, with enough to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: String,
    pub seeds: Value,
    pub outputs: Vec<String>,
    pub seconds: f64,
}

pub fn version_string() -> String {
    format!("cvqkd-{}", env!("CARGO_PKG_VERSION"))
}

struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

fn load_config(source: &ConfigSource, seed: Option<u64>) -> Result<SessionConfig, Usage> {
    let mut c = match (&source.config, &source.preset) {
        (Some(path), _) => SessionConfig::from_file(path)?,
        (None, Some(name)) => SessionConfig::preset(name)?,
        (None, None) => SessionConfig::paper_24km(),
    };
    for kv in &source.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Usage(format!("override `{kv}` is not KEY=VALUE")))?;
        c.set(k.trim(), v.trim())?;
    }
    if let Some(s) = seed {
        c.set_seed(s);
    }
    c.validate()?;
    Ok(c)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    pool.install(|| dispatch(&cli, out, err))
}

fn dispatch(cli: &Cli, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32 {
    let result = match &cli.command {
        Command::Simulate {
            source,
            out: dir,
            transport,
        } => simulate(cli, source, dir, *transport),
        Command::Sweep {
            source,
            param,
            from,
            to,
            steps,
            out: path,
        } => sweep(cli, source, param, *from, *to, *steps, path.as_deref(), out),
        Command::TomoFit {
            input,
            electronic_noise,
            out: path,
            histograms,
        } => tomo_fit(
            input,
            *electronic_noise,
            path.as_deref(),
            histograms.as_deref(),
        ),
        Command::ReconcileBench {
            n,
            rate,
            p,
            trials,
            max_iter,
        } => reconcile_bench(cli, *n, *rate, *p, *trials, *max_iter),
        Command::Keyrate { source } => keyrate(cli, source),
    };
    match result {
        Ok(Some((value, code))) => {
            let _ = out.write_all(render(&value, cli.json).as_bytes());
            code
        }
        Ok(None) => EXIT_OK,
        Err(CmdError::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(CmdError::Failure(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_FAILURE
        }
    }
}

enum CmdError {
    Usage(String),
    Failure(String),
}

impl From<Usage> for CmdError {
    fn from(u: Usage) -> Self {
        CmdError::Usage(u.0)
    }
}

fn failure(e: impl std::fmt::Display) -> CmdError {
    CmdError::Failure(e.to_string())
}

type CmdResult = Result<Option<(Value, i32)>, CmdError>;

fn write_file(
    dir: &Path,
    name: &str,
    bytes: &[u8],
    outputs: &mut Vec<String>,
) -> Result<(), CmdError> {
    fs::write(dir.join(name), bytes)
        .map_err(|e| failure(format!("{}: {e}", dir.join(name).display())))?;
    outputs.push(name.to_string());
    Ok(())
}

fn simulate(cli: &Cli, source: &ConfigSource, dir: &Path, transport: TransportKind) -> CmdResult {
    let config = load_config(source, cli.seed)?;
    let t = Instant::now();
    let result: SessionResult = match transport {
        TransportKind::Memory => run_session(&config),
        TransportKind::Tcp => {
            let (a, b) = StreamTransport::tcp_pair().map_err(failure)?;
            run_session_over(&config, a, b)
        }
    }
    .map_err(|e| match e {
        SessionError::Config(c) => CmdError::Usage(c.to_string()),
        e => failure(e),
    })?;
    let seconds = t.elapsed().as_secs_f64();
    fs::create_dir_all(dir).map_err(|e| failure(format!("{}: {e}", dir.display())))?;

    let mut outputs = Vec::new();
    let rep = &result.report;
    write_file(
        dir,
        "report.json",
        serde_json::to_string_pretty(rep).unwrap().as_bytes(),
        &mut outputs,
    )?;
    write_file(
        dir,
        "session.jsonl",
        result.log.to_json_lines().as_bytes(),
        &mut outputs,
    )?;
    write_file(
        dir,
        "transcript.bin",
        &result.transcript.to_bytes(),
        &mut outputs,
    )?;

    let (alice, bob) = physical_layer(&config, rayon::current_num_threads()).map_err(failure)?;
    let rows: Vec<RecordRow> = bob
        .records
        .iter()
        .filter(|r| r.role == SlotRole::Tomography)
        .map(|&record| RecordRow {
            record,
            symbol: Some(alice.symbols[record.slot_id as usize]),
        })
        .collect();
    let mut csv = Vec::new();
    write_records_csv(&mut csv, &rows).map_err(failure)?;
    write_file(dir, "tomography_records.csv", &csv, &mut outputs)?;
    if let Some(tomo) = &rep.tomography {
        // histograms are not serialized in the report; rebuild them
        let full = TomographyReport::from_records(&rows, tomo.electronic_noise).map_err(failure)?;
        let mut csv = Vec::new();
        write_histogram_csv(&mut csv, &full.histograms).map_err(failure)?;
        write_file(dir, "tomography_histograms.csv", &csv, &mut outputs)?;
    }
    if let (Some(plan), false) = (rep.privacy, result.keys.bob_key.is_empty()) {
        write_file(
            dir,
            "alice.key",
            &pack(&result.keys.alice_key),
            &mut outputs,
        )?;
        write_file(dir, "bob.key", &pack(&result.keys.bob_key), &mut outputs)?;
        let manifest = KeyManifest {
            key_bits: plan.l_out,
            key_bytes: plan.l_out.div_ceil(8),
            plan,
            hash_seed: derive_seed(config.seed_bob, domain::PA_SEED),
            reconciled_bits: rep.lengths.reconciled,
            sifted_bits: rep.lengths.accepted,
        };
        write_file(
            dir,
            "key_manifest.json",
            serde_json::to_string_pretty(&manifest).unwrap().as_bytes(),
            &mut outputs,
        )?;
    }
    let manifest = RunManifest {
        version: version_string(),
        command: "simulate".into(),
        config: config.to_text(),
        seeds: json!({ "alice": config.seed_alice, "bob": config.seed_bob, "channel": config.seed_channel }),
        outputs: outputs.clone(),
        seconds,
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).unwrap(),
    )
    .map_err(failure)?;

    let mut summary = json!({
        "exit_code": rep.exit_code,
        "slots": rep.lengths.slots,
        "accepted": rep.lengths.accepted,
        "reconciled": rep.lengths.reconciled,
        "final_key_bits": rep.lengths.final_key,
        "bits_per_slot": rep.bits_per_slot,
        "bits_per_sec": rep.bits_per_sec,
        "keys_match": rep.keys_match,
        "output_dir": dir.display().to_string(),
    });
    if let Some(a) = rep.outcome.abort() {
        summary["abort"] = json!({ "stage": a.stage, "cause": a.cause, "detail": a.detail });
    }
    if let Some(s) = &rep.security {
        summary["chi_BE"] = json!(s.chi_be);
        summary["I_AB"] = json!(s.i_ab);
        summary["excess_noise"] = json!(s.operating_point.excess_noise);
    }
    Ok(Some((summary, rep.exit_code)))
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    cli: &Cli,
    source: &ConfigSource,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
    path: Option<&Path>,
    out: &mut (dyn Write + Send),
) -> CmdResult {
    if param != "T" && param != "threshold" {
        return Err(CmdError::Usage(format!(
            "cannot sweep `{param}`; only T is supported"
        )));
    }
    if steps == 0 {
        return Err(CmdError::Usage("steps must be at least 1".into()));
    }
    if !(from.is_finite() && to.is_finite() && from >= 0.0 && to >= from) {
        return Err(CmdError::Usage(format!("empty range [{from}, {to}]")));
    }
    let config = load_config(source, cli.seed)?;
    let rows = sweep_threshold(
        &config.operating_point(),
        &BeamsplitterAttack,
        from,
        to,
        steps,
        config.symbol_rate,
    )
    .map_err(|e| CmdError::Usage(e.to_string()))?;
    let best = rows[argmax(&rows).unwrap()];
    let rates: Vec<f64> = rows.iter().map(|r| r.bits_per_sec).collect();
    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &rows).map_err(failure)?;
    match path {
        Some(p) => fs::write(p, &csv).map_err(|e| failure(format!("{}: {e}", p.display())))?,
        None if !cli.json => out.write_all(&csv).map_err(failure)?,
        None => {}
    }
    let mut value = json!({
        "steps": steps,
        "argmax": best,
        "unimodal": is_unimodal(&rates, 1e-9 * rates.iter().fold(0.0f64, |a, b| a.max(b.abs()))),
    });
    if cli.json && path.is_none() {
        value["rows"] = serde_json::to_value(&rows).unwrap();
    }
    Ok(Some((value, EXIT_OK)))
}

fn tomo_fit(
    input: &Path,
    electronic_noise: f64,
    path: Option<&Path>,
    histograms: Option<&Path>,
) -> CmdResult {
    let file =
        fs::File::open(input).map_err(|e| CmdError::Usage(format!("{}: {e}", input.display())))?;
    let rows = read_records_csv(std::io::BufReader::new(file))
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let report = TomographyReport::from_records(&rows, electronic_noise)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    if let Some(h) = histograms {
        let f = fs::File::create(h).map_err(|e| failure(format!("{}: {e}", h.display())))?;
        write_histogram_csv(std::io::BufWriter::new(f), &report.histograms).map_err(failure)?;
    }
    let value = serde_json::to_value(&report).unwrap();
    match path {
        Some(p) => {
            fs::write(p, serde_json::to_string_pretty(&value).unwrap()).map_err(failure)?;
            Ok(Some((
                json!({
                    "excess_noise": report.excess_noise.average,
                    "spread": report.excess_noise.spread,
                    "worst_p_value": report.worst_p_value(),
                    "output": p.display().to_string(),
                }),
                EXIT_OK,
            )))
        }
        None => Ok(Some((value, EXIT_OK))),
    }
}

fn reconcile_bench(
    cli: &Cli,
    n: usize,
    rate: f64,
    p: f64,
    trials: usize,
    max_iter: usize,
) -> CmdResult {
    if !(p > 0.0 && p < 0.5) {
        return Err(CmdError::Usage(format!(
            "crossover must be in (0, 0.5), got {p}"
        )));
    }
    if trials == 0 || max_iter == 0 {
        return Err(CmdError::Usage(
            "trials and max-iter must be positive".into(),
        ));
    }
    let params = BenchParams {
        n,
        rate,
        crossover: p,
        trials,
        max_iter,
        seed: cli.seed.unwrap_or(1),
    };
    let s = benchmark(&params).map_err(|e| CmdError::Usage(e.to_string()))?;
    Ok(Some((serde_json::to_value(&s).unwrap(), EXIT_OK)))
}

fn keyrate(cli: &Cli, source: &ConfigSource) -> CmdResult {
    let config = load_config(source, cli.seed)?;
    let report = evaluate(
        &config.operating_point(),
        &BeamsplitterAttack,
        config.excess_noise_ceiling,
        config.symbol_rate,
    )
    .map_err(|e| CmdError::Usage(e.to_string()))?;
    let code = match report.verdict {
        Verdict::Secure => EXIT_OK,
        Verdict::Abort(AbortReason::ExcessNoise) => 10,
        Verdict::Abort(AbortReason::NegativeMargin) => 11,
    };
    Ok(Some((serde_json::to_value(&report).unwrap(), code)))
}
