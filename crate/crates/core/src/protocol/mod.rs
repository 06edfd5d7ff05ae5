//! Alice and Bob as sans-IO state machines exchanging framed messages.
//!
//! Each party consumes a [`Message`] and returns the messages it wants to
//! send. [`run_session`] drives both in one thread; [`run_session_over`]
//! runs each party on its own thread over any [`Transport`]. The classical
//! channel is assumed authenticated; there is no MAC layer.

mod alice;
mod bob;
mod codes;
pub mod config;
mod log;
mod session;
pub mod transcript;
pub mod transport;
pub mod wire;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{LoPhase, QuadratureRecord, SlotRole, Symbol};

pub use alice::Alice;
pub use bob::{BlockPlan, Bob};
pub use config::{ConfigError, Modulation, SessionConfig};
pub use log::{LogEvent, SessionLog};
pub use session::{
    physical_layer, run_session, run_session_over, AliceInput, BobInput, KeyMaterial, Outcome,
    ReconciliationSummary, SessionError, SessionReport, SessionResult, StageLengths,
};
pub use transcript::{validate_transcript, Transcript, TranscriptEntry, TranscriptSummary};
pub use transport::{MemoryTransport, StreamTransport, Transport};
pub use wire::{split_frames, Message, MessageType, ReportBody};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("unknown message tag {0}")]
    UnknownTag(u8),
    #[error("truncated frame")]
    Truncated,
    #[error("{0} trailing bytes after message")]
    TrailingBytes(usize),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("{party} did not expect {got} in state {state}")]
    Unexpected {
        party: &'static str,
        state: &'static str,
        got: &'static str,
    },
    #[error("protocol violation: {0}")]
    Violation(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl From<std::io::Error> for ProtocolError {
    fn from(e: std::io::Error) -> Self {
        ProtocolError::Transport(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Stage {
    Tomography = 1,
    Security = 2,
    Reconciliation = 3,
    PrivacyAmplification = 4,
}

impl Stage {
    pub fn from_u8(v: u8) -> Result<Self, ProtocolError> {
        Ok(match v {
            1 => Stage::Tomography,
            2 => Stage::Security,
            3 => Stage::Reconciliation,
            4 => Stage::PrivacyAmplification,
            _ => return Err(ProtocolError::Malformed(format!("unknown stage {v}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum AbortCause {
    /// Estimated excess noise above the ceiling.
    ExcessNoise = 1,
    /// Tomography data unusable.
    TomographyFailed = 2,
    /// `beta * I_AB <= chi_BE`.
    NegativeMargin = 3,
    /// Fewer accepted bits than one block.
    TooFewBits = 4,
    /// No block decoded and verified.
    ReconciliationExhausted = 5,
    /// Privacy amplification leaves no key.
    EmptyKey = 6,
}

impl AbortCause {
    pub fn from_u8(v: u8) -> Result<Self, ProtocolError> {
        use AbortCause::*;
        Ok(match v {
            1 => ExcessNoise,
            2 => TomographyFailed,
            3 => NegativeMargin,
            4 => TooFewBits,
            5 => ReconciliationExhausted,
            6 => EmptyKey,
            _ => return Err(ProtocolError::Malformed(format!("unknown abort cause {v}"))),
        })
    }

    /// Process exit code reported by the command-line driver.
    pub fn exit_code(self) -> i32 {
        match self {
            AbortCause::ExcessNoise | AbortCause::TomographyFailed => 10,
            AbortCause::NegativeMargin | AbortCause::EmptyKey => 11,
            AbortCause::TooFewBits | AbortCause::ReconciliationExhausted => 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortInfo {
    pub stage: Stage,
    pub cause: AbortCause,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartyId {
    Alice,
    Bob,
}

impl PartyId {
    pub fn name(self) -> &'static str {
        match self {
            PartyId::Alice => "alice",
            PartyId::Bob => "bob",
        }
    }
}

/// A protocol participant.
pub trait Party: Send {
    fn id(&self) -> PartyId;
    /// Messages sent before anything is received.
    fn start(&mut self) -> Result<Vec<Message>, ProtocolError>;
    fn handle(&mut self, msg: Message) -> Result<Vec<Message>, ProtocolError>;
    fn finished(&self) -> bool;
    /// Log events produced since the last call.
    fn drain_events(&mut self) -> Vec<LogEvent>;
}

/// Bob's sign decision for a data sample: `+1` above `T`, `-1` below `-T`,
/// `None` otherwise (ties are discarded).
pub fn bob_classify(record: &QuadratureRecord, threshold: f64) -> Option<i8> {
    debug_assert_eq!(record.role, SlotRole::Data);
    if record.value > threshold {
        Some(1)
    } else if record.value < -threshold {
        Some(-1)
    } else {
        None
    }
}

/// Sign of Alice's symbol projected on the axis Bob measured.
pub fn alice_project(symbol: Symbol, phase: LoPhase) -> Result<i8, ProtocolError> {
    let (re, im) = symbol.signs();
    let s = match phase {
        LoPhase::Zero => re,
        LoPhase::HalfPi => im,
        LoPhase::QuarterPi => {
            return Err(ProtocolError::Violation("projection at phase pi/4".into()))
        }
    };
    Ok(if s > 0.0 { 1 } else { -1 })
}

/// Key bit for a sign: `+1 -> 1`, `-1 -> 0`.
pub fn sign_bit(sign: i8) -> u8 {
    u8::from(sign > 0)
}
