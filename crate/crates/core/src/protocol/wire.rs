//! Framed messages: `[type: u8][payload length: u32 LE][payload]`.
//!
//! Integers are little-endian, slot ids are `u64`, bit arrays are packed
//! little-endian within bytes.

use serde::{Deserialize, Serialize};

use super::{AbortCause, ProtocolError, Stage};
use crate::bits::{pack, unpack};
use crate::channel::Symbol;

pub const HEADER_LEN: usize = 5;
/// Largest payload accepted from the wire.
pub const MAX_PAYLOAD: usize = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum MessageType {
    SlotRoles = 1,
    TomoDisclose = 2,
    PhaseReveal = 3,
    AcceptSet = 4,
    Syndrome = 5,
    VerifyTag = 6,
    PaSeed = 7,
    Abort = 8,
    Report = 9,
}

impl MessageType {
    pub fn from_tag(tag: u8) -> Result<Self, ProtocolError> {
        use MessageType::*;
        Ok(match tag {
            1 => SlotRoles,
            2 => TomoDisclose,
            3 => PhaseReveal,
            4 => AcceptSet,
            5 => Syndrome,
            6 => VerifyTag,
            7 => PaSeed,
            8 => Abort,
            9 => Report,
            _ => return Err(ProtocolError::UnknownTag(tag)),
        })
    }

    pub fn name(self) -> &'static str {
        use MessageType::*;
        match self {
            SlotRoles => "SLOT_ROLES",
            TomoDisclose => "TOMO_DISCLOSE",
            PhaseReveal => "PHASE_REVEAL",
            AcceptSet => "ACCEPT_SET",
            Syndrome => "SYNDROME",
            VerifyTag => "VERIFY_TAG",
            PaSeed => "PA_SEED",
            Abort => "ABORT",
            Report => "REPORT",
        }
    }
}

/// Alice's per-block reconciliation outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportBody {
    Reconciliation {
        verified: Vec<bool>,
        iterations: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    /// One bit per slot, set for tomography slots.
    SlotRoles {
        tomography: Vec<u8>,
    },
    /// Data slots that passed the threshold, ascending.
    AcceptSet {
        slots: Vec<u64>,
    },
    TomoDisclose {
        entries: Vec<(u64, Symbol)>,
    },
    /// One bit per accepted slot in accept-set order, set for phase pi/2.
    PhaseReveal {
        phases: Vec<u8>,
    },
    Syndrome {
        block: u32,
        blocks: u32,
        n: u32,
        m: u32,
        code_seed: u64,
        crossover: f64,
        syndrome: Vec<u8>,
    },
    VerifyTag {
        block: u32,
        tag_seed: u64,
        tag: u64,
    },
    PaSeed {
        seed: u64,
        n_in: u64,
        l_out: u64,
    },
    Abort {
        stage: Stage,
        cause: AbortCause,
        detail: String,
    },
    Report(ReportBody),
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or(ProtocolError::Truncated)?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8, ProtocolError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, ProtocolError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, ProtocolError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn bits(&mut self, len: usize) -> Result<Vec<u8>, ProtocolError> {
        let bytes = self.take(len.div_ceil(8))?;
        unpack(bytes, len).ok_or(ProtocolError::Truncated)
    }
    fn count(&mut self, item_size: usize) -> Result<usize, ProtocolError> {
        let n = self.u64()?;
        let remaining = (self.buf.len() - self.pos) as u64;
        if n.saturating_mul(item_size as u64) > remaining {
            return Err(ProtocolError::Truncated);
        }
        Ok(n as usize)
    }
    fn rest(&mut self) -> &'a [u8] {
        let out = &self.buf[self.pos..];
        self.pos = self.buf.len();
        out
    }
    fn done(&self) -> Result<(), ProtocolError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(ProtocolError::TrailingBytes(self.buf.len() - self.pos))
        }
    }
}

impl Message {
    pub fn kind(&self) -> MessageType {
        match self {
            Message::SlotRoles { .. } => MessageType::SlotRoles,
            Message::AcceptSet { .. } => MessageType::AcceptSet,
            Message::TomoDisclose { .. } => MessageType::TomoDisclose,
            Message::PhaseReveal { .. } => MessageType::PhaseReveal,
            Message::Syndrome { .. } => MessageType::Syndrome,
            Message::VerifyTag { .. } => MessageType::VerifyTag,
            Message::PaSeed { .. } => MessageType::PaSeed,
            Message::Abort { .. } => MessageType::Abort,
            Message::Report(_) => MessageType::Report,
        }
    }

    fn payload(&self) -> Vec<u8> {
        let mut p = Vec::new();
        match self {
            Message::SlotRoles { tomography } | Message::PhaseReveal { phases: tomography } => {
                p.extend_from_slice(&(tomography.len() as u64).to_le_bytes());
                p.extend_from_slice(&pack(tomography));
            }
            Message::AcceptSet { slots } => {
                p.extend_from_slice(&(slots.len() as u64).to_le_bytes());
                for s in slots {
                    p.extend_from_slice(&s.to_le_bytes());
                }
            }
            Message::TomoDisclose { entries } => {
                p.extend_from_slice(&(entries.len() as u64).to_le_bytes());
                for (slot, sym) in entries {
                    p.extend_from_slice(&slot.to_le_bytes());
                    p.push(sym.index());
                }
            }
            Message::Syndrome {
                block,
                blocks,
                n,
                m,
                code_seed,
                crossover,
                syndrome,
            } => {
                p.extend_from_slice(&block.to_le_bytes());
                p.extend_from_slice(&blocks.to_le_bytes());
                p.extend_from_slice(&n.to_le_bytes());
                p.extend_from_slice(&m.to_le_bytes());
                p.extend_from_slice(&code_seed.to_le_bytes());
                p.extend_from_slice(&crossover.to_le_bytes());
                p.extend_from_slice(&pack(syndrome));
            }
            Message::VerifyTag {
                block,
                tag_seed,
                tag,
            } => {
                p.extend_from_slice(&block.to_le_bytes());
                p.extend_from_slice(&tag_seed.to_le_bytes());
                p.extend_from_slice(&tag.to_le_bytes());
            }
            Message::PaSeed { seed, n_in, l_out } => {
                p.extend_from_slice(&seed.to_le_bytes());
                p.extend_from_slice(&n_in.to_le_bytes());
                p.extend_from_slice(&l_out.to_le_bytes());
            }
            Message::Abort {
                stage,
                cause,
                detail,
            } => {
                p.push(*stage as u8);
                p.push(*cause as u8);
                p.extend_from_slice(detail.as_bytes());
            }
            Message::Report(body) => {
                p.extend_from_slice(&serde_json::to_vec(body).expect("report serializes"));
            }
        }
        p
    }

    /// Full frame.
    pub fn encode(&self) -> Vec<u8> {
        let payload = self.payload();
        let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
        out.push(self.kind() as u8);
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&payload);
        out
    }

    /// Parses exactly one frame.
    pub fn decode(frame: &[u8]) -> Result<Self, ProtocolError> {
        if frame.len() < HEADER_LEN {
            return Err(ProtocolError::Truncated);
        }
        let kind = MessageType::from_tag(frame[0])?;
        let len = u32::from_le_bytes(frame[1..5].try_into().unwrap()) as usize;
        let body = &frame[HEADER_LEN..];
        if body.len() < len {
            return Err(ProtocolError::Truncated);
        }
        if body.len() > len {
            return Err(ProtocolError::TrailingBytes(body.len() - len));
        }
        Self::decode_payload(kind, body)
    }

    pub fn decode_payload(kind: MessageType, payload: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Reader {
            buf: payload,
            pos: 0,
        };
        let msg = match kind {
            MessageType::SlotRoles | MessageType::PhaseReveal => {
                let n = r.u64()?;
                if n.div_ceil(8) > payload.len() as u64 {
                    return Err(ProtocolError::Truncated);
                }
                let bits = r.bits(n as usize)?;
                if kind == MessageType::SlotRoles {
                    Message::SlotRoles { tomography: bits }
                } else {
                    Message::PhaseReveal { phases: bits }
                }
            }
            MessageType::AcceptSet => {
                let n = r.count(8)?;
                Message::AcceptSet {
                    slots: (0..n).map(|_| r.u64()).collect::<Result<_, _>>()?,
                }
            }
            MessageType::TomoDisclose => {
                let n = r.count(9)?;
                let mut entries = Vec::with_capacity(n);
                for _ in 0..n {
                    let slot = r.u64()?;
                    let sym = Symbol::new(r.u8()?)
                        .map_err(|e| ProtocolError::Malformed(e.to_string()))?;
                    entries.push((slot, sym));
                }
                Message::TomoDisclose { entries }
            }
            MessageType::Syndrome => {
                let block = r.u32()?;
                let blocks = r.u32()?;
                let n = r.u32()?;
                let m = r.u32()?;
                let code_seed = r.u64()?;
                let crossover = f64::from_bits(r.u64()?);
                let syndrome = r.bits(m as usize)?;
                Message::Syndrome {
                    block,
                    blocks,
                    n,
                    m,
                    code_seed,
                    crossover,
                    syndrome,
                }
            }
            MessageType::VerifyTag => Message::VerifyTag {
                block: r.u32()?,
                tag_seed: r.u64()?,
                tag: r.u64()?,
            },
            MessageType::PaSeed => Message::PaSeed {
                seed: r.u64()?,
                n_in: r.u64()?,
                l_out: r.u64()?,
            },
            MessageType::Abort => {
                let stage = Stage::from_u8(r.u8()?)?;
                let cause = AbortCause::from_u8(r.u8()?)?;
                let detail = String::from_utf8(r.rest().to_vec())
                    .map_err(|_| ProtocolError::Malformed("abort detail is not UTF-8".into()))?;
                Message::Abort {
                    stage,
                    cause,
                    detail,
                }
            }
            MessageType::Report => Message::Report(
                serde_json::from_slice(r.rest())
                    .map_err(|e| ProtocolError::Malformed(e.to_string()))?,
            ),
        };
        r.done()?;
        Ok(msg)
    }
}

/// Splits a byte stream into frames.
pub fn split_frames(mut bytes: &[u8]) -> Result<Vec<&[u8]>, ProtocolError> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        if bytes.len() < HEADER_LEN {
            return Err(ProtocolError::Truncated);
        }
        let len = u32::from_le_bytes(bytes[1..5].try_into().unwrap()) as usize;
        let end = HEADER_LEN + len;
        if bytes.len() < end {
            return Err(ProtocolError::Truncated);
        }
        out.push(&bytes[..end]);
        bytes = &bytes[end..];
    }
    Ok(out)
}
