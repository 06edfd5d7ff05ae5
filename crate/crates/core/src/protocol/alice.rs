use rayon::prelude::*;
use serde_json::json;

use super::codes;
use super::log::LogEvent;
use super::wire::{Message, ReportBody};
use super::{alice_project, sign_bit, AbortInfo, Party, PartyId, ProtocolError};
use crate::channel::{LoPhase, Symbol};
use crate::privacy::toeplitz_hash;
use crate::reconciliation::decode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    AwaitRoles,
    AwaitAcceptSet,
    AwaitPhases,
    AwaitBlocks,
    AwaitSeed,
    Done,
}

impl State {
    fn name(self) -> &'static str {
        match self {
            State::AwaitRoles => "await_roles",
            State::AwaitAcceptSet => "await_accept_set",
            State::AwaitPhases => "await_phases",
            State::AwaitBlocks => "await_blocks",
            State::AwaitSeed => "await_seed",
            State::Done => "done",
        }
    }
}

struct SyndromeBlock {
    n: usize,
    m: usize,
    code_seed: u64,
    crossover: f64,
    syndrome: Vec<u8>,
}

/// Alice: discloses tomography symbols, projects her symbols on Bob's
/// axes, corrects her bits toward Bob's, and hashes.
pub struct Alice {
    symbols: Vec<Symbol>,
    max_iter: usize,
    state: State,
    tomography: Vec<u8>,
    accepted: Vec<u64>,
    pub(crate) projected: Vec<u8>,
    syndromes: Vec<Option<SyndromeBlock>>,
    tags: Vec<Option<(u64, u64)>>,
    corrected: Vec<Option<Vec<u8>>>,
    pub(crate) reconciled: Vec<u8>,
    pub(crate) key: Vec<u8>,
    pub(crate) abort: Option<AbortInfo>,
    events: Vec<LogEvent>,
}

impl Alice {
    /// `symbols[i]` is the state sent in slot `i`.
    pub fn new(symbols: Vec<Symbol>, max_iter: usize) -> Self {
        Self {
            symbols,
            max_iter,
            state: State::AwaitRoles,
            tomography: Vec::new(),
            accepted: Vec::new(),
            projected: Vec::new(),
            syndromes: Vec::new(),
            tags: Vec::new(),
            corrected: Vec::new(),
            reconciled: Vec::new(),
            key: Vec::new(),
            abort: None,
            events: Vec::new(),
        }
    }

    pub fn key(&self) -> &[u8] {
        &self.key
    }

    pub fn abort_info(&self) -> Option<&AbortInfo> {
        self.abort.as_ref()
    }

    fn log(&mut self, event: &str, data: serde_json::Value) {
        self.events.push(LogEvent::new("alice", event, data));
    }

    fn violation(msg: String) -> ProtocolError {
        ProtocolError::Violation(msg)
    }

    fn on_roles(&mut self, tomography: Vec<u8>) -> Result<Vec<Message>, ProtocolError> {
        if tomography.len() != self.symbols.len() {
            return Err(Self::violation(format!(
                "roles for {} slots, sent {}",
                tomography.len(),
                self.symbols.len()
            )));
        }
        self.tomography = tomography;
        self.state = State::AwaitAcceptSet;
        Ok(Vec::new())
    }

    fn on_accept_set(&mut self, slots: Vec<u64>) -> Result<Vec<Message>, ProtocolError> {
        let mut prev = None;
        for &s in &slots {
            if self.tomography.get(s as usize) != Some(&0) {
                return Err(Self::violation(format!(
                    "accepted slot {s} is not a data slot"
                )));
            }
            if prev.is_some_and(|p| p >= s) {
                return Err(Self::violation("accept set not strictly ascending".into()));
            }
            prev = Some(s);
        }
        self.accepted = slots;
        let entries: Vec<(u64, Symbol)> = self
            .tomography
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == 1)
            .map(|(i, _)| (i as u64, self.symbols[i]))
            .collect();
        self.log(
            "disclose",
            json!({ "tomography_slots": entries.len(), "accepted": self.accepted.len() }),
        );
        self.state = State::AwaitPhases;
        Ok(vec![Message::TomoDisclose { entries }])
    }

    fn on_phases(&mut self, phases: Vec<u8>) -> Result<Vec<Message>, ProtocolError> {
        if phases.len() != self.accepted.len() {
            return Err(Self::violation(format!(
                "{} phases for {} accepted slots",
                phases.len(),
                self.accepted.len()
            )));
        }
        self.projected = self
            .accepted
            .iter()
            .zip(&phases)
            .map(|(&slot, &p)| {
                let phase = if p == 1 {
                    LoPhase::HalfPi
                } else {
                    LoPhase::Zero
                };
                alice_project(self.symbols[slot as usize], phase).map(sign_bit)
            })
            .collect::<Result<_, _>>()?;
        self.state = State::AwaitBlocks;
        Ok(Vec::new())
    }

    fn ensure_blocks(&mut self, blocks: u32) -> Result<(), ProtocolError> {
        let blocks = blocks as usize;
        if self.syndromes.is_empty() {
            if blocks == 0 {
                return Err(Self::violation("zero blocks".into()));
            }
            self.syndromes.resize_with(blocks, || None);
            self.tags.resize(blocks, None);
        } else if self.syndromes.len() != blocks {
            return Err(Self::violation("block count changed".into()));
        }
        Ok(())
    }

    fn on_syndrome(
        &mut self,
        block: u32,
        blocks: u32,
        sb: SyndromeBlock,
    ) -> Result<Vec<Message>, ProtocolError> {
        self.ensure_blocks(blocks)?;
        let b = block as usize;
        if b >= self.syndromes.len() || self.syndromes[b].is_some() {
            return Err(Self::violation(format!(
                "unexpected syndrome for block {block}"
            )));
        }
        if (b + 1) * sb.n > self.projected.len() || sb.m == 0 || sb.m >= sb.n {
            return Err(Self::violation(format!(
                "block {block} shape n={} m={} does not fit",
                sb.n, sb.m
            )));
        }
        self.syndromes[b] = Some(sb);
        Ok(Vec::new())
    }

    fn on_tag(
        &mut self,
        block: u32,
        tag_seed: u64,
        tag: u64,
    ) -> Result<Vec<Message>, ProtocolError> {
        let b = block as usize;
        if b >= self.tags.len() || self.syndromes[b].is_none() || self.tags[b].is_some() {
            return Err(Self::violation(format!("unexpected tag for block {block}")));
        }
        self.tags[b] = Some((tag_seed, tag));
        if self.tags.iter().all(Option::is_some) {
            return self.decode_all();
        }
        Ok(Vec::new())
    }

    fn decode_all(&mut self) -> Result<Vec<Message>, ProtocolError> {
        let first = self.syndromes[0].as_ref().unwrap();
        let code = codes::code(first.n, first.m, first.code_seed)
            .map_err(|e| ProtocolError::Internal(e.to_string()))?;
        let results: Vec<(Option<Vec<u8>>, u32)> = self
            .syndromes
            .par_iter()
            .zip(self.tags.par_iter())
            .enumerate()
            .map(|(b, (sb, tag))| {
                let sb = sb.as_ref().unwrap();
                let (tag_seed, tag) = tag.unwrap();
                if (sb.n, sb.m, sb.code_seed) != (first.n, first.m, first.code_seed) {
                    return Err(Self::violation("blocks use different codes".into()));
                }
                let bits = &self.projected[b * sb.n..(b + 1) * sb.n];
                let r = decode(
                    &code.decoder,
                    bits,
                    &sb.syndrome,
                    sb.crossover,
                    self.max_iter,
                    tag,
                    tag_seed,
                )
                .map_err(|e| ProtocolError::Violation(e.to_string()))?;
                let ok = r.accepted();
                Ok((ok.then_some(r.corrected), r.iterations as u32))
            })
            .collect::<Result<_, ProtocolError>>()?;
        let verified: Vec<bool> = results.iter().map(|(c, _)| c.is_some()).collect();
        let iterations: Vec<u32> = results.iter().map(|(_, i)| *i).collect();
        self.corrected = results.into_iter().map(|(c, _)| c).collect();
        self.log(
            "decoded",
            json!({ "blocks": verified.len(), "verified": verified.iter().filter(|&&v| v).count() }),
        );
        self.state = State::AwaitSeed;
        Ok(vec![Message::Report(ReportBody::Reconciliation {
            verified,
            iterations,
        })])
    }

    fn on_seed(&mut self, seed: u64, n_in: u64, l_out: u64) -> Result<Vec<Message>, ProtocolError> {
        self.reconciled = self.corrected.iter().flatten().flatten().copied().collect();
        if self.reconciled.len() as u64 != n_in {
            return Err(Self::violation(format!(
                "hash input {} bits, have {}",
                n_in,
                self.reconciled.len()
            )));
        }
        self.key = toeplitz_hash(&self.reconciled, seed, l_out as usize)
            .map_err(|e| ProtocolError::Violation(e.to_string()))?;
        self.log("key", json!({ "bits": self.key.len() }));
        self.state = State::Done;
        Ok(Vec::new())
    }
}

impl Party for Alice {
    fn id(&self) -> PartyId {
        PartyId::Alice
    }

    fn start(&mut self) -> Result<Vec<Message>, ProtocolError> {
        Ok(Vec::new())
    }

    fn handle(&mut self, msg: Message) -> Result<Vec<Message>, ProtocolError> {
        match (self.state, msg) {
            (State::AwaitRoles, Message::SlotRoles { tomography }) => self.on_roles(tomography),
            (State::AwaitAcceptSet, Message::AcceptSet { slots }) => self.on_accept_set(slots),
            (State::AwaitPhases, Message::PhaseReveal { phases }) => self.on_phases(phases),
            (
                State::AwaitBlocks,
                Message::Syndrome {
                    block,
                    blocks,
                    n,
                    m,
                    code_seed,
                    crossover,
                    syndrome,
                },
            ) => self.on_syndrome(
                block,
                blocks,
                SyndromeBlock {
                    n: n as usize,
                    m: m as usize,
                    code_seed,
                    crossover,
                    syndrome,
                },
            ),
            (
                State::AwaitBlocks,
                Message::VerifyTag {
                    block,
                    tag_seed,
                    tag,
                },
            ) => self.on_tag(block, tag_seed, tag),
            (State::AwaitSeed, Message::PaSeed { seed, n_in, l_out }) => {
                self.on_seed(seed, n_in, l_out)
            }
            (
                s,
                Message::Abort {
                    stage,
                    cause,
                    detail,
                },
            ) if s != State::Done => {
                self.log(
                    "abort",
                    json!({ "stage": stage, "cause": cause, "detail": detail }),
                );
                self.abort = Some(AbortInfo {
                    stage,
                    cause,
                    detail,
                });
                self.state = State::Done;
                Ok(Vec::new())
            }
            (s, msg) => Err(ProtocolError::Unexpected {
                party: "alice",
                state: s.name(),
                got: msg.kind().name(),
            }),
        }
    }

    fn finished(&self) -> bool {
        self.state == State::Done
    }

    fn drain_events(&mut self) -> Vec<LogEvent> {
        std::mem::take(&mut self.events)
    }
}
