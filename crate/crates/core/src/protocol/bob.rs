use std::collections::BTreeMap;

use serde_json::json;

use super::codes;
use super::log::LogEvent;
use super::wire::{Message, ReportBody};
use super::{
    bob_classify, sign_bit, AbortCause, AbortInfo, Party, PartyId, ProtocolError, SessionConfig,
    Stage,
};
use crate::channel::{LoPhase, QuadratureRecord, SlotRole, Symbol};
use crate::math::binary_entropy;
use crate::privacy::{final_key_length, toeplitz_hash, AmplificationPlan};
use crate::reconciliation::{
    checks_for_rate, compute_syndrome, measured_efficiency, rate_for_efficiency, verification_tag,
    MIN_BLOCK_LEN, TAG_BITS,
};
use crate::rng::{derive_seed, domain};
use crate::security::{
    evaluate, AbortReason, BeamsplitterAttack, OperatingPoint, SecurityReport, Verdict,
};
use crate::tomography::TomographyReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Init,
    AwaitDisclosure,
    AwaitReport,
    Done,
}

impl State {
    fn name(self) -> &'static str {
        match self {
            State::Init => "init",
            State::AwaitDisclosure => "await_disclosure",
            State::AwaitReport => "await_report",
            State::Done => "done",
        }
    }
}

/// Bob's reconciliation parameters, fixed when syndromes are sent.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlockPlan {
    pub blocks: usize,
    pub n: usize,
    pub m: usize,
    pub rate: f64,
    pub crossover: f64,
    pub code_seed: u64,
    /// Syndrome plus tag bits over all blocks.
    pub leak_bits: u64,
}

/// Bob: measures, announces roles and accepted slots, runs tomography and
/// the security check, sends syndromes, and picks the hash seed.
pub struct Bob {
    config: SessionConfig,
    records: Vec<QuadratureRecord>,
    state: State,
    pub(crate) accepted: Vec<u64>,
    pub(crate) sifted: Vec<u8>,
    phases: Vec<u8>,
    pub(crate) tomography: Option<TomographyReport>,
    pub(crate) security: Option<SecurityReport>,
    pub(crate) blocks: Option<BlockPlan>,
    pub(crate) verified: Vec<bool>,
    pub(crate) iterations: Vec<u32>,
    pub(crate) plan: Option<AmplificationPlan>,
    pub(crate) reconciled: Vec<u8>,
    pub(crate) key: Vec<u8>,
    pub(crate) abort: Option<AbortInfo>,
    events: Vec<LogEvent>,
}

impl Bob {
    /// `records[i]` must be slot `i`.
    pub fn new(config: SessionConfig, records: Vec<QuadratureRecord>) -> Self {
        Self {
            config,
            records,
            state: State::Init,
            accepted: Vec::new(),
            sifted: Vec::new(),
            phases: Vec::new(),
            tomography: None,
            security: None,
            blocks: None,
            verified: Vec::new(),
            iterations: Vec::new(),
            plan: None,
            reconciled: Vec::new(),
            key: Vec::new(),
            abort: None,
            events: Vec::new(),
        }
    }

    pub fn abort_info(&self) -> Option<&AbortInfo> {
        self.abort.as_ref()
    }

    pub fn key(&self) -> &[u8] {
        &self.key
    }

    fn log(&mut self, event: &str, data: serde_json::Value) {
        self.events.push(LogEvent::new("bob", event, data));
    }

    fn abort(&mut self, stage: Stage, cause: AbortCause, detail: String) -> Vec<Message> {
        self.log(
            "abort",
            json!({ "stage": stage, "cause": cause, "detail": detail }),
        );
        self.abort = Some(AbortInfo {
            stage,
            cause,
            detail: detail.clone(),
        });
        self.state = State::Done;
        vec![Message::Abort {
            stage,
            cause,
            detail,
        }]
    }

    fn unexpected(&self, msg: &Message) -> ProtocolError {
        ProtocolError::Unexpected {
            party: "bob",
            state: self.state.name(),
            got: msg.kind().name(),
        }
    }

    fn start_messages(&mut self) -> Vec<Message> {
        let t = self.config.threshold;
        let tomography: Vec<u8> = self
            .records
            .iter()
            .map(|r| u8::from(r.role == SlotRole::Tomography))
            .collect();
        for rec in &self.records {
            if rec.role != SlotRole::Data {
                continue;
            }
            if let Some(sign) = bob_classify(rec, t) {
                self.accepted.push(rec.slot_id);
                self.sifted.push(sign_bit(sign));
                self.phases.push(u8::from(rec.phase == LoPhase::HalfPi));
            }
        }
        let tomo_slots = tomography.iter().filter(|&&b| b == 1).count();
        let data_slots = self.records.len() - tomo_slots;
        self.log(
            "sift",
            json!({
                "slots": self.records.len(),
                "tomography_slots": tomo_slots,
                "data_slots": data_slots,
                "accepted": self.accepted.len(),
            }),
        );
        self.state = State::AwaitDisclosure;
        vec![
            Message::SlotRoles { tomography },
            Message::AcceptSet {
                slots: self.accepted.clone(),
            },
        ]
    }

    /// Operating point as Bob measures it.
    fn measured_point(&self, tomo: &TomographyReport) -> OperatingPoint {
        let r = self.config.amplitude();
        let k = tomo.states.len() as f64;
        let mu = tomo
            .states
            .iter()
            .map(|s| 0.5 * (s.mean[0].abs() + s.mean[1].abs()))
            .sum::<f64>()
            / k;
        let variance = tomo
            .states
            .iter()
            .map(|s| 0.5 * (s.covariance[0][0] + s.covariance[1][1]))
            .sum::<f64>()
            / k;
        let eta = (mu / (2.0 * r)).powi(2).clamp(1e-12, 1.0);
        OperatingPoint {
            mu,
            threshold: self.config.threshold,
            noise_variance: variance.max(1e-12),
            excess_noise: tomo.excess_noise.average,
            total_transmission: eta,
            amplitude: r,
            beta: self.config.beta,
            p_tomo: self.config.p_tomo,
        }
    }

    fn on_disclosure(
        &mut self,
        entries: Vec<(u64, Symbol)>,
    ) -> Result<Vec<Message>, ProtocolError> {
        let mut cells: BTreeMap<(Symbol, LoPhase), Vec<f64>> = BTreeMap::new();
        for (slot, symbol) in entries {
            let rec = self.records.get(slot as usize).ok_or_else(|| {
                ProtocolError::Violation(format!("disclosed slot {slot} out of range"))
            })?;
            if rec.role != SlotRole::Tomography {
                return Err(ProtocolError::Violation(format!(
                    "disclosed slot {slot} is a data slot"
                )));
            }
            cells
                .entry((symbol, rec.phase))
                .or_default()
                .push(rec.value);
        }
        let tomo = match TomographyReport::from_cells(&cells, self.config.channel.electronic_noise)
        {
            Ok(t) => t,
            Err(e) => {
                return Ok(self.abort(
                    Stage::Tomography,
                    AbortCause::TomographyFailed,
                    e.to_string(),
                ))
            }
        };
        let flagged = tomo.states.iter().filter(|s| s.flagged()).count();
        self.log(
            "tomography",
            json!({
                "excess_noise": tomo.excess_noise.average,
                "spread": tomo.excess_noise.spread,
                "flagged_states": flagged,
            }),
        );
        let op = self.measured_point(&tomo);
        self.tomography = Some(tomo);
        let report = evaluate(
            &op,
            &BeamsplitterAttack,
            self.config.excess_noise_ceiling,
            self.config.symbol_rate,
        )
        .map_err(|e| ProtocolError::Internal(e.to_string()))?;
        self.log(
            "security",
            json!({
                "p_acc": report.p_acc,
                "e": report.error_rate,
                "I_AB": report.i_ab,
                "chi_BE": report.chi_be,
                "margin": report.margin,
                "bits_per_sec": report.bits_per_sec,
            }),
        );
        let verdict = report.verdict;
        let (e_est, margin, excess) = (report.error_rate, report.margin, op.excess_noise);
        self.security = Some(report);
        match verdict {
            Verdict::Abort(AbortReason::ExcessNoise) => {
                let detail = format!(
                    "excess noise {excess:.5} above ceiling {}",
                    self.config.excess_noise_ceiling
                );
                return Ok(self.abort(Stage::Tomography, AbortCause::ExcessNoise, detail));
            }
            Verdict::Abort(AbortReason::NegativeMargin) => {
                return Ok(self.abort(
                    Stage::Security,
                    AbortCause::NegativeMargin,
                    format!("margin {margin:.6}"),
                ));
            }
            Verdict::Secure => {}
        }

        let total = self.sifted.len();
        if total < MIN_BLOCK_LEN {
            let detail = format!("{total} accepted bits, need {MIN_BLOCK_LEN}");
            return Ok(self.abort(Stage::Reconciliation, AbortCause::TooFewBits, detail));
        }
        let blocks = total.div_ceil(self.config.block_len).max(1);
        let n = total / blocks;
        let crossover = e_est.clamp(1e-6, 0.45);
        let rate = self
            .config
            .code_rate
            .unwrap_or_else(|| rate_for_efficiency(self.config.beta, crossover));
        let m = checks_for_rate(n, rate).clamp(1, n - 1);
        let code_seed = derive_seed(self.config.seed_bob, domain::CODE_SEED);
        let code =
            codes::code(n, m, code_seed).map_err(|e| ProtocolError::Internal(e.to_string()))?;
        let tag_root = derive_seed(self.config.seed_bob, domain::TAG_SEED);
        let plan = BlockPlan {
            blocks,
            n,
            m,
            rate: 1.0 - m as f64 / n as f64,
            crossover,
            code_seed,
            leak_bits: (blocks * (m + TAG_BITS)) as u64,
        };
        self.log("reconciliation", serde_json::to_value(&plan).unwrap());
        let mut out = vec![Message::PhaseReveal {
            phases: std::mem::take(&mut self.phases),
        }];
        for b in 0..blocks {
            let bits = &self.sifted[b * n..(b + 1) * n];
            let syndrome = compute_syndrome(bits, &code.matrix)
                .map_err(|e| ProtocolError::Internal(e.to_string()))?;
            let tag_seed = derive_seed(tag_root, b as u64);
            out.push(Message::Syndrome {
                block: b as u32,
                blocks: blocks as u32,
                n: n as u32,
                m: m as u32,
                code_seed,
                crossover,
                syndrome,
            });
            out.push(Message::VerifyTag {
                block: b as u32,
                tag_seed,
                tag: verification_tag(bits, tag_seed),
            });
        }
        self.blocks = Some(plan);
        self.state = State::AwaitReport;
        Ok(out)
    }

    fn on_report(
        &mut self,
        verified: Vec<bool>,
        iterations: Vec<u32>,
    ) -> Result<Vec<Message>, ProtocolError> {
        let plan = self.blocks.clone().expect("plan set before report");
        if verified.len() != plan.blocks || iterations.len() != plan.blocks {
            return Err(ProtocolError::Violation(format!(
                "report covers {} blocks, expected {}",
                verified.len(),
                plan.blocks
            )));
        }
        let ok = verified.iter().filter(|&&v| v).count();
        self.log("verified", json!({ "blocks": plan.blocks, "verified": ok }));
        self.verified = verified;
        self.iterations = iterations;
        if ok == 0 {
            let detail = format!("none of {} blocks verified", plan.blocks);
            return Ok(self.abort(
                Stage::Reconciliation,
                AbortCause::ReconciliationExhausted,
                detail,
            ));
        }
        for (b, &v) in self.verified.iter().enumerate() {
            if v {
                self.reconciled
                    .extend_from_slice(&self.sifted[b * plan.n..(b + 1) * plan.n]);
            }
        }
        let sec = self.security.as_ref().expect("security evaluated");
        let i_est = 1.0 - binary_entropy(plan.crossover);
        let beta = measured_efficiency(plan.rate, plan.crossover).min(1.0);
        let pa = final_key_length(
            self.reconciled.len() as u64,
            beta,
            i_est,
            sec.chi_be,
            plan.leak_bits,
            self.config.s_sec,
        );
        self.log("privacy", serde_json::to_value(pa).unwrap());
        self.plan = Some(pa);
        if pa.l_out == 0 {
            let detail = format!("no key left from {} reconciled bits", self.reconciled.len());
            return Ok(self.abort(Stage::PrivacyAmplification, AbortCause::EmptyKey, detail));
        }
        let seed = derive_seed(self.config.seed_bob, domain::PA_SEED);
        self.key = toeplitz_hash(&self.reconciled, seed, pa.l_out as usize)
            .map_err(|e| ProtocolError::Internal(e.to_string()))?;
        self.state = State::Done;
        Ok(vec![Message::PaSeed {
            seed,
            n_in: pa.n_in,
            l_out: pa.l_out,
        }])
    }
}

impl Party for Bob {
    fn id(&self) -> PartyId {
        PartyId::Bob
    }

    fn start(&mut self) -> Result<Vec<Message>, ProtocolError> {
        if self.state != State::Init {
            return Err(ProtocolError::Internal("bob started twice".into()));
        }
        Ok(self.start_messages())
    }

    fn handle(&mut self, msg: Message) -> Result<Vec<Message>, ProtocolError> {
        match (self.state, msg) {
            (State::AwaitDisclosure, Message::TomoDisclose { entries }) => {
                self.on_disclosure(entries)
            }
            (
                State::AwaitReport,
                Message::Report(ReportBody::Reconciliation {
                    verified,
                    iterations,
                }),
            ) => self.on_report(verified, iterations),
            (
                s,
                Message::Abort {
                    stage,
                    cause,
                    detail,
                },
            ) if s != State::Done => {
                self.abort = Some(AbortInfo {
                    stage,
                    cause,
                    detail,
                });
                self.state = State::Done;
                Ok(Vec::new())
            }
            (_, msg) => Err(self.unexpected(&msg)),
        }
    }

    fn finished(&self) -> bool {
        self.state == State::Done
    }

    fn drain_events(&mut self) -> Vec<LogEvent> {
        std::mem::take(&mut self.events)
    }
}
