//! Recorded classical traffic and an independent checker for disclosure
//! ordering and leakage.

use serde::{Deserialize, Serialize};

use super::wire::Message;
use super::{PartyId, ProtocolError};
use crate::reconciliation::TAG_BITS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub from: PartyId,
    pub frame: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn push(&mut self, from: PartyId, frame: Vec<u8>) {
        self.entries.push(TranscriptEntry { from, frame });
    }

    /// Direction byte (0 Alice, 1 Bob) followed by the frame, per entry.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for e in &self.entries {
            out.push(match e.from {
                PartyId::Alice => 0,
                PartyId::Bob => 1,
            });
            out.extend_from_slice(&e.frame);
        }
        out
    }

    pub fn total_bytes(&self) -> usize {
        self.entries.iter().map(|e| e.frame.len()).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSummary {
    pub messages: usize,
    /// Syndrome plus tag bits sent by Bob.
    pub leak_bits: u64,
    pub syndrome_bits: u64,
    pub tag_bits: u64,
    pub accepted: usize,
    pub disclosed: usize,
    pub aborted: bool,
}

/// Replays the transcript and checks:
/// roles precede everything else; every accepted slot is a data slot;
/// disclosure names only tomography slots; phases follow the accept set and
/// cover it exactly; syndromes and tags follow the phase reveal and pair up
/// block by block; every block is covered before the report; each message
/// comes from the expected party.
pub fn validate_transcript(t: &Transcript) -> Result<TranscriptSummary, ProtocolError> {
    let v = |m: String| Err(ProtocolError::Violation(m));
    let mut roles: Option<Vec<u8>> = None;
    let mut accepted: Option<usize> = None;
    let mut phases_seen = false;
    // (blocks announced, next block expected, syndrome awaiting its tag)
    let mut blocks: Option<u32> = None;
    let mut next_block = 0u32;
    let mut pending: Option<u32> = None;
    let mut s = TranscriptSummary::default();
    for (i, e) in t.entries.iter().enumerate() {
        let msg = Message::decode(&e.frame)?;
        s.messages += 1;
        if s.aborted {
            return v(format!("message {i} after abort"));
        }
        let expect_from = match msg {
            Message::TomoDisclose { .. } | Message::Report(_) => PartyId::Alice,
            Message::Abort { .. } => e.from,
            _ => PartyId::Bob,
        };
        if e.from != expect_from {
            return v(format!(
                "message {i} ({}) sent by {}",
                msg.kind().name(),
                e.from.name()
            ));
        }
        if roles.is_none() && !matches!(msg, Message::SlotRoles { .. } | Message::Abort { .. }) {
            return v(format!(
                "message {i} ({}) before SLOT_ROLES",
                msg.kind().name()
            ));
        }
        match msg {
            Message::SlotRoles { tomography } => {
                if roles.is_some() {
                    return v("second SLOT_ROLES".into());
                }
                roles = Some(tomography);
            }
            Message::AcceptSet { slots } => {
                let r = roles.as_ref().unwrap();
                if accepted.is_some() {
                    return v("second ACCEPT_SET".into());
                }
                if let Some(bad) = slots.iter().find(|&&x| r.get(x as usize) != Some(&0)) {
                    return v(format!("ACCEPT_SET names non-data slot {bad}"));
                }
                accepted = Some(slots.len());
                s.accepted = slots.len();
            }
            Message::TomoDisclose { entries } => {
                let r = roles.as_ref().unwrap();
                if let Some((bad, _)) = entries.iter().find(|(x, _)| r.get(*x as usize) != Some(&1))
                {
                    return v(format!("TOMO_DISCLOSE names data slot {bad}"));
                }
                s.disclosed += entries.len();
            }
            Message::PhaseReveal { phases } => {
                let Some(n) = accepted else {
                    return v("PHASE_REVEAL before ACCEPT_SET".into());
                };
                if phases.len() != n {
                    return v(format!(
                        "PHASE_REVEAL covers {} slots, accept set has {n}",
                        phases.len()
                    ));
                }
                phases_seen = true;
            }
            Message::Syndrome {
                block,
                blocks: total,
                m,
                syndrome,
                ..
            } => {
                if !phases_seen {
                    return v("SYNDROME before PHASE_REVEAL".into());
                }
                if pending.is_some() {
                    return v(format!(
                        "SYNDROME for block {block} before the previous VERIFY_TAG"
                    ));
                }
                if *blocks.get_or_insert(total) != total || block != next_block || block >= total {
                    return v(format!(
                        "SYNDROME for block {block} of {total} out of order"
                    ));
                }
                pending = Some(block);
                next_block += 1;
                if syndrome.len() != m as usize {
                    return v("syndrome length disagrees with header".into());
                }
                s.syndrome_bits += m as u64;
            }
            Message::VerifyTag { block, .. } => {
                if !phases_seen {
                    return v("VERIFY_TAG before PHASE_REVEAL".into());
                }
                if pending.take() != Some(block) {
                    return v(format!("VERIFY_TAG for block {block} without its SYNDROME"));
                }
                s.tag_bits += TAG_BITS as u64;
            }
            Message::Report(_) | Message::PaSeed { .. } => {
                if s.syndrome_bits == 0 {
                    return v(format!("{} before any SYNDROME", msg.kind().name()));
                }
                if pending.is_some() || blocks != Some(next_block) {
                    return v(format!(
                        "{} before every block is tagged",
                        msg.kind().name()
                    ));
                }
            }
            Message::Abort { .. } => s.aborted = true,
        }
    }
    s.leak_bits = s.syndrome_bits + s.tag_bits;
    Ok(s)
}
