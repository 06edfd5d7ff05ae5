use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::alice::Alice;
use super::bob::{BlockPlan, Bob};
use super::log::{LogEvent, SessionLog};
use super::transcript::Transcript;
use super::transport::Transport;
use super::wire::Message;
use super::{AbortInfo, ConfigError, Party, PartyId, ProtocolError, SessionConfig};
use crate::bits::hamming_distance;
use crate::channel::{run_batch_with_workers, ChannelError, QuadratureRecord, SlotSetting, Symbol};
use crate::privacy::AmplificationPlan;
use crate::reconciliation::measured_efficiency;
use crate::rng::{derive_seed, domain, substream};
use crate::security::SecurityReport;
use crate::tomography::TomographyReport;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// What Alice knows before any classical message.
pub struct AliceInput {
    pub symbols: Vec<Symbol>,
}

/// What Bob knows before any classical message.
pub struct BobInput {
    pub records: Vec<QuadratureRecord>,
}

/// Alice's symbols, Bob's random settings, and the channel outcomes.
pub fn physical_layer(
    config: &SessionConfig,
    workers: usize,
) -> Result<(AliceInput, BobInput), ChannelError> {
    let n = config.slots as usize;
    let mut rng = substream(derive_seed(config.seed_alice, domain::ALICE_SYMBOLS), 0);
    let symbols: Vec<Symbol> = (0..n).map(|_| Symbol::random(&mut rng)).collect();
    let mut rng = substream(derive_seed(config.seed_bob, domain::BOB_SETTINGS), 0);
    let settings: Vec<SlotSetting> = (0..n)
        .map(|_| SlotSetting::random(config.p_tomo, &mut rng))
        .collect();
    let records = run_batch_with_workers(
        &symbols,
        &settings,
        config.amplitude(),
        &config.channel,
        config.seed_channel,
        0,
        workers,
    )?;
    Ok((AliceInput { symbols }, BobInput { records }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Outcome {
    Key,
    Aborted(AbortInfo),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Key => 0,
            Outcome::Aborted(a) => a.cause.exit_code(),
        }
    }

    pub fn abort(&self) -> Option<&AbortInfo> {
        match self {
            Outcome::Key => None,
            Outcome::Aborted(a) => Some(a),
        }
    }
}

/// Bit counts after each stage; never increasing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageLengths {
    pub slots: u64,
    pub data_slots: u64,
    pub accepted: u64,
    pub reconciled: u64,
    pub final_key: u64,
}

impl StageLengths {
    pub fn is_non_increasing(&self) -> bool {
        self.slots >= self.data_slots
            && self.data_slots >= self.accepted
            && self.accepted >= self.reconciled
            && self.reconciled >= self.final_key
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconciliationSummary {
    #[serde(flatten)]
    pub plan: BlockPlan,
    pub verified_blocks: usize,
    pub mean_iterations: f64,
    /// Disagreement between Alice's projected bits and Bob's sign bits.
    /// Only a simulation can see this.
    pub measured_error_rate: f64,
    /// Code rate over `1 - h2(measured_error_rate)`.
    pub measured_efficiency: f64,
}

/// Bits held by each side after each stage.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyMaterial {
    pub bob_sifted: Vec<u8>,
    pub alice_projected: Vec<u8>,
    pub bob_reconciled: Vec<u8>,
    pub alice_reconciled: Vec<u8>,
    pub bob_key: Vec<u8>,
    pub alice_key: Vec<u8>,
}

impl KeyMaterial {
    pub fn keys_match(&self) -> bool {
        self.bob_key == self.alice_key && self.bob_reconciled == self.alice_reconciled
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub config: SessionConfig,
    pub outcome: Outcome,
    pub exit_code: i32,
    pub security: Option<SecurityReport>,
    pub tomography: Option<TomographyReport>,
    pub reconciliation: Option<ReconciliationSummary>,
    pub privacy: Option<AmplificationPlan>,
    pub lengths: StageLengths,
    /// Final key bits per slot.
    pub bits_per_slot: f64,
    /// `bits_per_slot` times the symbol rate.
    pub bits_per_sec: f64,
    pub keys_match: bool,
    /// Syndrome and tag bits Bob disclosed.
    pub leak_bits: u64,
    pub transcript_bytes: u64,
}

pub struct SessionResult {
    pub report: SessionReport,
    pub keys: KeyMaterial,
    pub log: SessionLog,
    pub transcript: Transcript,
}

fn parties(config: &SessionConfig, workers: usize) -> Result<(Alice, Bob), SessionError> {
    config.validate()?;
    let (a, b) = physical_layer(config, workers)?;
    Ok((
        Alice::new(a.symbols, config.max_iter),
        Bob::new(config.clone(), b.records),
    ))
}

fn wire_event(from: PartyId, msg: &Message, bytes: usize) -> LogEvent {
    LogEvent::new(
        "wire",
        "message",
        json!({ "from": from, "type": msg.kind().name(), "bytes": bytes }),
    )
}

/// Runs a full session in the calling thread. Messages still go through
/// the byte encoding so the transcript is exactly what a socket would
/// carry.
pub fn run_session(config: &SessionConfig) -> Result<SessionResult, SessionError> {
    let (mut alice, mut bob) = parties(config, rayon::current_num_threads())?;
    let mut log = SessionLog::default();
    let mut transcript = Transcript::default();
    log.push(LogEvent::new(
        "session",
        "start",
        json!({ "slots": config.slots }),
    ));
    let mut queue: VecDeque<(PartyId, Message)> = VecDeque::new();
    queue.extend(bob.start()?.into_iter().map(|m| (PartyId::Bob, m)));
    queue.extend(alice.start()?.into_iter().map(|m| (PartyId::Alice, m)));
    log.extend(bob.drain_events());
    while let Some((from, msg)) = queue.pop_front() {
        let frame = msg.encode();
        log.push(wire_event(from, &msg, frame.len()));
        let msg = Message::decode(&frame)?;
        transcript.push(from, frame);
        let target: &mut dyn Party = match from {
            PartyId::Bob => &mut alice,
            PartyId::Alice => &mut bob,
        };
        let out = target.handle(msg)?;
        let id = target.id();
        log.extend(target.drain_events());
        queue.extend(out.into_iter().map(|m| (id, m)));
    }
    if !alice.finished() || !bob.finished() {
        return Err(ProtocolError::Internal("session stalled".into()).into());
    }
    Ok(finish(config, alice, bob, log, transcript))
}

fn drive(
    party: &mut dyn Party,
    t: &mut dyn Transport,
    transcript: &mut Transcript,
) -> Result<Vec<LogEvent>, ProtocolError> {
    let me = party.id();
    let peer = match me {
        PartyId::Alice => PartyId::Bob,
        PartyId::Bob => PartyId::Alice,
    };
    let mut events = Vec::new();
    let mut out = party.start()?;
    loop {
        events.extend(party.drain_events());
        for m in out.drain(..) {
            let frame = m.encode();
            events.push(wire_event(me, &m, frame.len()));
            t.send(&frame)?;
            transcript.push(me, frame);
        }
        if party.finished() {
            return Ok(events);
        }
        let frame = t.recv()?;
        let msg = Message::decode(&frame)?;
        transcript.push(peer, frame);
        out = party.handle(msg)?;
    }
}

/// Runs Alice and Bob on separate threads over the given transport ends.
/// The returned transcript is Bob's view, which lists every frame.
pub fn run_session_over(
    config: &SessionConfig,
    mut alice_end: impl Transport,
    mut bob_end: impl Transport,
) -> Result<SessionResult, SessionError> {
    let (mut alice, mut bob) = parties(config, rayon::current_num_threads())?;
    let mut alice_transcript = Transcript::default();
    let mut bob_transcript = Transcript::default();
    let (ra, rb) = std::thread::scope(|s| {
        let ha = s.spawn(|| {
            let r = drive(&mut alice, &mut alice_end, &mut alice_transcript);
            drop(alice_end);
            r
        });
        let hb = s.spawn(|| {
            let r = drive(&mut bob, &mut bob_end, &mut bob_transcript);
            drop(bob_end);
            r
        });
        (ha.join(), hb.join())
    });
    let panicked = || ProtocolError::Internal("party thread panicked".into());
    let alice_events = ra.map_err(|_| panicked())??;
    let bob_events = rb.map_err(|_| panicked())??;
    let mut log = SessionLog::default();
    log.push(LogEvent::new(
        "session",
        "start",
        json!({ "slots": config.slots }),
    ));
    log.extend(bob_events);
    log.extend(alice_events);
    Ok(finish(config, alice, bob, log, bob_transcript))
}

fn finish(
    config: &SessionConfig,
    alice: Alice,
    bob: Bob,
    mut log: SessionLog,
    transcript: Transcript,
) -> SessionResult {
    let outcome = match bob.abort.clone().or_else(|| alice.abort.clone()) {
        Some(a) => Outcome::Aborted(a),
        None => Outcome::Key,
    };
    let keys = KeyMaterial {
        bob_sifted: bob.sifted.clone(),
        alice_projected: alice.projected.clone(),
        bob_reconciled: bob.reconciled.clone(),
        alice_reconciled: alice.reconciled.clone(),
        bob_key: bob.key.clone(),
        alice_key: alice.key.clone(),
    };
    let data_slots = log
        .find("sift")
        .and_then(|e| e.data["data_slots"].as_u64())
        .unwrap_or(0);
    let lengths = StageLengths {
        slots: config.slots,
        data_slots,
        accepted: bob.accepted.len() as u64,
        reconciled: bob.reconciled.len() as u64,
        final_key: bob.key.len() as u64,
    };
    let reconciliation = bob.blocks.clone().map(|plan| {
        let verified_blocks = bob.verified.iter().filter(|&&v| v).count();
        let mean_iterations = if bob.iterations.is_empty() {
            0.0
        } else {
            bob.iterations.iter().map(|&i| i as f64).sum::<f64>() / bob.iterations.len() as f64
        };
        let measured_error_rate =
            if keys.alice_projected.len() == keys.bob_sifted.len() && !keys.bob_sifted.is_empty() {
                hamming_distance(&keys.alice_projected, &keys.bob_sifted) as f64
                    / keys.bob_sifted.len() as f64
            } else {
                f64::NAN
            };
        ReconciliationSummary {
            measured_efficiency: measured_efficiency(plan.rate, measured_error_rate),
            plan,
            verified_blocks,
            mean_iterations,
            measured_error_rate,
        }
    });
    let bits_per_slot = lengths.final_key as f64 / config.slots as f64;
    let report = SessionReport {
        config: config.clone(),
        exit_code: outcome.exit_code(),
        outcome,
        security: bob.security.clone(),
        tomography: bob.tomography.clone(),
        leak_bits: reconciliation.as_ref().map_or(0, |r| r.plan.leak_bits),
        reconciliation,
        privacy: bob.plan,
        lengths,
        bits_per_slot,
        bits_per_sec: bits_per_slot * config.symbol_rate,
        keys_match: keys.keys_match(),
        transcript_bytes: transcript.total_bytes() as u64,
    };
    log.push(LogEvent::new(
        "session",
        "end",
        json!({ "exit_code": report.exit_code, "final_key_bits": lengths.final_key, "keys_match": report.keys_match }),
    ));
    SessionResult {
        report,
        keys,
        log,
        transcript,
    }
}
