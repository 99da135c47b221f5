//! Multi-connectivity PDCP duplication with a UE duplication status report.
//!
//! Three modes share the same per-link fading streams:
//!
//! * `sc`: the macro node alone serves the UE.
//! * `mc`: every node of the duplication set transmits its copy and keeps
//!   retransmitting on NACK, even after the UE already holds the packet.
//! * `mc_discard`: on the first successful decode of a flagged packet the UE
//!   acks the delivering node and sends a status report (the PDCP sequence
//!   number) to the other set nodes. A node receiving it drops an untransmitted
//!   copy, cancels a pending retransmission, or suppresses the retransmission
//!   a late NACK would otherwise trigger. A transmission already in the air
//!   is never aborted.
//!
//! The fading of node `i`'s `k`-th attempt on packet `seq` is variate
//! `(seq, k)` of stream `dupstat/link:i`, so the modes see identical
//! channels and differ only in what they choose to send.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch;
use crate::config::{check_positive, check_probability, ConfigError};
use crate::engine::{DispatchError, Engine, EngineError, RngStream, Slot, SlotClock, Stop};
use crate::metrics::{CounterSet, EmpiricalDistribution, OutageEstimate};
use crate::radio::{decode_outcome, LinkModel};
use crate::report::{fmt_f64, Table};

pub type Seq = u64;
pub type NodeId = usize;

/// Index of the serving (macro) node in the duplication set.
pub const MACRO: NodeId = 0;

const FEEDBACK_DELAY_SLOTS: Slot = 1;
const EPISODE_CHUNK: u64 = 4096;

const PRIO_ARRIVAL: u8 = 0;
const PRIO_TX: u8 = 1;
const PRIO_FEEDBACK: u8 = 2;
const PRIO_REPORT: u8 = 3;

#[derive(Debug, Error)]
pub enum DupstatError {
    #[error("packet {0} was already enqueued")]
    DuplicateSeq(Seq),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl From<DispatchError<DupstatError>> for DupstatError {
    fn from(e: DispatchError<DupstatError>) -> Self {
        e.source
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sc,
    Mc,
    McDiscard,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Sc, Mode::Mc, Mode::McDiscard];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sc => "sc",
            Mode::Mc => "mc",
            Mode::McDiscard => "mc_discard",
        }
    }

    pub fn duplicates(self) -> bool {
        !matches!(self, Mode::Sc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalProcess {
    /// One packet in flight: each packet is an independent episode.
    #[default]
    Isolated,
    /// Poisson arrivals on one shared timeline with FIFO queues per node.
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DupstatConfig {
    /// One link per duplication-set node; the first is the macro node.
    pub links: Vec<LinkModel>,
    pub harq_rtt_slots: u64,
    pub report_delay_slots: u64,
    pub packets: u64,
    pub arrival: ArrivalProcess,
    /// Mean arrivals per slot for [`ArrivalProcess::Poisson`].
    pub arrival_rate_per_slot: f64,
    pub outage_target: f64,
    /// Per-node transmission cap per packet; 0 means unlimited.
    pub max_harq_attempts: u32,
    pub modes: Vec<Mode>,
    pub slot_duration_ms: f64,
}

impl Default for DupstatConfig {
    fn default() -> Self {
        Self {
            links: vec![LinkModel::default(); 2],
            harq_rtt_slots: 4,
            report_delay_slots: 1,
            packets: 1_000_000,
            arrival: ArrivalProcess::Isolated,
            arrival_rate_per_slot: 0.2,
            outage_target: 1e-5,
            max_harq_attempts: 0,
            modes: Mode::ALL.to_vec(),
            slot_duration_ms: 1.0,
        }
    }
}

impl DupstatConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.links.len() < 2 {
            return Err(ConfigError::invalid(
                "dupstat.links",
                "duplication set needs at least 2 nodes",
            ));
        }
        for (i, l) in self.links.iter().enumerate() {
            if !l.mean_snr_db.is_finite() || !l.target_snr_db.is_finite() {
                return Err(ConfigError::invalid(
                    format!("dupstat.links[{i}]"),
                    "SNR values must be finite",
                ));
            }
        }
        if self.harq_rtt_slots == 0 {
            return Err(ConfigError::invalid("dupstat.harq_rtt_slots", "must be at least 1"));
        }
        if self.packets == 0 {
            return Err(ConfigError::invalid("dupstat.packets", "must be at least 1"));
        }
        check_positive("dupstat.arrival_rate_per_slot", self.arrival_rate_per_slot)?;
        check_probability("dupstat.outage_target", self.outage_target)?;
        if self.outage_target == 0.0 {
            return Err(ConfigError::invalid("dupstat.outage_target", "must be positive"));
        }
        check_positive("dupstat.slot_duration_ms", self.slot_duration_ms)?;
        if self.modes.is_empty() {
            return Err(ConfigError::invalid("dupstat.modes", "at least one mode required"));
        }
        Ok(())
    }

    /// Per-slot failure probability of one lockstep round in `mode`.
    pub fn round_failure_probability(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Sc => self.links[MACRO].outage_probability(),
            _ => self.links.iter().map(LinkModel::outage_probability).product(),
        }
    }

    pub fn analytic_outage_latency(&self, mode: Mode, target: f64) -> u64 {
        analytic_outage_latency(self.round_failure_probability(mode), self.harq_rtt_slots, target)
    }
}

/// Smallest `n` with `p_round^n <= target`, mapped to the latency of the
/// `n`-th attempt: `1 + (n - 1) * rtt` slots.
pub fn analytic_outage_latency(p_round: f64, rtt: u64, target: f64) -> u64 {
    if p_round <= target {
        return 1;
    }
    let mut n = 1u64;
    let mut tail = p_round;
    while tail > target {
        n += 1;
        tail *= p_round;
    }
    1 + (n - 1) * rtt
}

/// `P(latency = 1 + (n-1)·rtt) = p^(n-1)·(1-p)` for `n >= 1`.
pub fn geometric_latency_pmf(p_round: f64, n: u64) -> f64 {
    p_round.powi(n as i32 - 1) * (1.0 - p_round)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdcpPacket {
    pub seq: Seq,
    pub arrival_slot: Slot,
    pub dup_flag: bool,
}

/// Nodes participating in duplication; fixed for a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicationSet(Vec<NodeId>);

impl DuplicationSet {
    pub fn new(nodes: Vec<NodeId>) -> Option<Self> {
        (nodes.len() >= 2).then_some(Self(nodes))
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarqState {
    /// Buffered, first transmission allowed from `earliest_slot` on.
    Unsent { earliest_slot: Slot },
    AwaitingFeedback { decision_slot: Slot },
    PendingRetx { retx_slot: Slot },
}

#[derive(Debug, Clone)]
pub struct NodeTxState {
    pub node: NodeId,
    link: LinkModel,
    fifo: VecDeque<Seq>,
    harq: BTreeMap<Seq, HarqState>,
    suppressed: BTreeSet<Seq>,
    attempts: BTreeMap<Seq, u32>,
    last_tx_slot: Option<Slot>,
    requested: BTreeSet<Slot>,
}

impl NodeTxState {
    fn new(node: NodeId, link: LinkModel) -> Self {
        Self {
            node,
            link,
            fifo: VecDeque::new(),
            harq: BTreeMap::new(),
            suppressed: BTreeSet::new(),
            attempts: BTreeMap::new(),
            last_tx_slot: None,
            requested: BTreeSet::new(),
        }
    }

    pub fn contains(&self, seq: Seq) -> bool {
        self.harq.contains_key(&seq)
    }

    pub fn state(&self, seq: Seq) -> Option<HarqState> {
        self.harq.get(&seq).copied()
    }

    pub fn buffered(&self) -> usize {
        self.fifo.len()
    }

    fn remove(&mut self, seq: Seq) {
        if self.harq.remove(&seq).is_some() {
            self.fifo.retain(|&s| s != seq);
        }
        self.suppressed.remove(&seq);
    }

    fn head_eligible(&self, now: Slot) -> Option<Seq> {
        self.fifo.iter().copied().find(|s| match self.harq[s] {
            HarqState::Unsent { earliest_slot } => earliest_slot <= now,
            HarqState::PendingRetx { retx_slot } => retx_slot <= now,
            HarqState::AwaitingFeedback { .. } => false,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicationStatusReport {
    pub seq: Seq,
    pub origin_ue: u32,
    pub destination: NodeId,
    pub delivery_slot: Slot,
    pub arrival_at_node: Slot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryRecord {
    pub seq: Seq,
    pub arrival_slot: Slot,
    /// `None` when every copy was dropped after the attempt cap.
    pub first_success_slot: Option<Slot>,
    pub total_transmissions: u32,
}

impl DeliveryRecord {
    pub fn latency(&self) -> Option<Slot> {
        self.first_success_slot.map(|s| s - self.arrival_slot)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DupEvent {
    Arrival { seq: Seq },
    TxOpportunity { node: NodeId },
    Feedback { node: NodeId, seq: Seq, ack: bool },
    StatusReport { node: NodeId, seq: Seq },
}

/// One UE served by a duplication set on one event timeline.
pub struct DuplicationSim<'a> {
    cfg: &'a DupstatConfig,
    mode: Mode,
    set: DuplicationSet,
    streams: &'a [RngStream],
    nodes: Vec<NodeTxState>,
    records: BTreeMap<Seq, DeliveryRecord>,
    flagged: BTreeSet<Seq>,
    reports: Vec<DuplicationStatusReport>,
    counters: CounterSet,
}

impl<'a> DuplicationSim<'a> {
    pub fn new(cfg: &'a DupstatConfig, mode: Mode, streams: &'a [RngStream]) -> Self {
        let nodes = cfg
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| NodeTxState::new(i, *l))
            .collect();
        Self {
            cfg,
            mode,
            set: DuplicationSet::new((0..cfg.links.len()).collect()).expect("validated"),
            streams,
            nodes,
            records: BTreeMap::new(),
            flagged: BTreeSet::new(),
            reports: Vec::new(),
            counters: CounterSet::new(),
        }
    }

    pub fn node(&self, id: NodeId) -> &NodeTxState {
        &self.nodes[id]
    }

    pub fn record(&self, seq: Seq) -> Option<&DeliveryRecord> {
        self.records.get(&seq)
    }

    pub fn reports(&self) -> &[DuplicationStatusReport] {
        &self.reports
    }

    pub fn counters(&self) -> &CounterSet {
        &self.counters
    }

    pub fn into_records(self) -> (Vec<DeliveryRecord>, CounterSet) {
        (self.records.into_values().collect(), self.counters)
    }

    fn request_tx(&mut self, engine: &mut Engine<DupEvent>, node: NodeId, slot: Slot) -> Result<(), EngineError> {
        if self.nodes[node].requested.insert(slot) {
            engine.schedule(slot, PRIO_TX, DupEvent::TxOpportunity { node })?;
        }
        Ok(())
    }

    /// Buffer `pkt` at the serving node (SC) or at every set node (MC modes).
    pub fn enqueue_packet(&mut self, engine: &mut Engine<DupEvent>, pkt: PdcpPacket) -> Result<(), DupstatError> {
        if self.records.contains_key(&pkt.seq) {
            return Err(DupstatError::DuplicateSeq(pkt.seq));
        }
        self.records.insert(
            pkt.seq,
            DeliveryRecord {
                seq: pkt.seq,
                arrival_slot: pkt.arrival_slot,
                first_success_slot: None,
                total_transmissions: 0,
            },
        );
        let targets: Vec<NodeId> = if self.mode.duplicates() {
            self.flagged.insert(pkt.seq);
            self.set.nodes().to_vec()
        } else {
            vec![MACRO]
        };
        for n in targets {
            let st = &mut self.nodes[n];
            st.fifo.push_back(pkt.seq);
            st.harq.insert(
                pkt.seq,
                HarqState::Unsent {
                    earliest_slot: pkt.arrival_slot + 1,
                },
            );
            self.request_tx(engine, n, pkt.arrival_slot + 1)?;
        }
        Ok(())
    }

    /// One transmission attempt by `node` in the current slot, if it has an
    /// eligible packet.
    pub fn transmit_slot(&mut self, engine: &mut Engine<DupEvent>, node: NodeId) -> Result<(), DupstatError> {
        let now = engine.now();
        let st = &mut self.nodes[node];
        st.requested.remove(&now);
        if st.last_tx_slot == Some(now) {
            // Already used this slot; try again in the next one.
            if st.head_eligible(now).is_some() {
                self.request_tx(engine, node, now + 1)?;
            }
            return Ok(());
        }
        let Some(seq) = st.head_eligible(now) else {
            return Ok(());
        };
        let attempt = st.attempts.entry(seq).or_insert(0);
        let k = *attempt;
        *attempt += 1;
        st.last_tx_slot = Some(now);
        st.harq.insert(
            seq,
            HarqState::AwaitingFeedback {
                decision_slot: now + FEEDBACK_DELAY_SLOTS,
            },
        );
        let link = st.link;
        let mut u = self.streams[node].fork(seq);
        u.set_word_pos(u128::from(k) * 2);
        let snr = link.draw_snr(&mut u);
        let ok = decode_outcome(snr, link.target_snr()).is_success();

        self.counters.incr("transmissions", 1);
        if let Some(r) = self.records.get_mut(&seq) {
            r.total_transmissions += 1;
        }
        engine.schedule(
            now + FEEDBACK_DELAY_SLOTS,
            PRIO_FEEDBACK,
            DupEvent::Feedback { node, seq, ack: ok },
        )?;
        if ok {
            self.on_decode_success(engine, seq, now, node)?;
        }
        if self.nodes[node].head_eligible(now).is_some() {
            self.request_tx(engine, node, now + 1)?;
        }
        Ok(())
    }

    /// UE side of a successful decode. Only the first success per packet
    /// counts; later copies are discarded at the UE (the delivering node is
    /// still acked through its feedback event).
    pub fn on_decode_success(
        &mut self,
        engine: &mut Engine<DupEvent>,
        seq: Seq,
        slot: Slot,
        delivering_node: NodeId,
    ) -> Result<(), DupstatError> {
        let Some(rec) = self.records.get_mut(&seq) else {
            return Ok(());
        };
        if rec.first_success_slot.is_some() {
            self.counters.incr("duplicates_discarded_at_ue", 1);
            return Ok(());
        }
        rec.first_success_slot = Some(slot);
        self.counters.incr("delivered", 1);
        if self.mode == Mode::McDiscard && self.flagged.contains(&seq) {
            self.counters.incr("reports_emitted", 1);
            let at = slot + self.cfg.report_delay_slots;
            for &dest in self.set.nodes() {
                if dest == delivering_node {
                    continue;
                }
                self.reports.push(DuplicationStatusReport {
                    seq,
                    origin_ue: 0,
                    destination: dest,
                    delivery_slot: slot,
                    arrival_at_node: at,
                });
                engine.schedule(at, PRIO_REPORT, DupEvent::StatusReport { node: dest, seq })?;
            }
        }
        Ok(())
    }

    fn on_feedback(&mut self, engine: &mut Engine<DupEvent>, node: NodeId, seq: Seq, ack: bool) -> Result<(), DupstatError> {
        let now = engine.now();
        let cap = self.cfg.max_harq_attempts;
        let st = &mut self.nodes[node];
        if !st.contains(seq) {
            return Ok(());
        }
        if ack || st.suppressed.contains(&seq) {
            st.remove(seq);
            return Ok(());
        }
        if cap > 0 && st.attempts.get(&seq).copied().unwrap_or(0) >= cap {
            st.remove(seq);
            self.counters.incr("copies_dropped", 1);
            return Ok(());
        }
        let retx_slot = now - FEEDBACK_DELAY_SLOTS + self.cfg.harq_rtt_slots;
        st.harq.insert(seq, HarqState::PendingRetx { retx_slot });
        self.request_tx(engine, node, retx_slot)?;
        Ok(())
    }

    /// Network side of a duplication status report. Idempotent.
    pub fn on_status_report(&mut self, node: NodeId, seq: Seq) {
        let st = &mut self.nodes[node];
        match st.state(seq) {
            Some(HarqState::Unsent { .. }) => {
                st.remove(seq);
                self.counters.incr("discarded_unsent", 1);
            }
            Some(HarqState::PendingRetx { .. }) => {
                st.remove(seq);
                self.counters.incr("retx_cancelled", 1);
            }
            Some(HarqState::AwaitingFeedback { .. }) => {
                st.suppressed.insert(seq);
                self.counters.incr("retx_suppressed", 1);
            }
            None => {}
        }
    }

    pub fn handle(&mut self, engine: &mut Engine<DupEvent>, ev: DupEvent) -> Result<(), DupstatError> {
        match ev {
            DupEvent::Arrival { seq } => {
                let pkt = PdcpPacket {
                    seq,
                    arrival_slot: engine.now(),
                    dup_flag: self.mode.duplicates(),
                };
                self.enqueue_packet(engine, pkt)
            }
            DupEvent::TxOpportunity { node } => self.transmit_slot(engine, node),
            DupEvent::Feedback { node, seq, ack } => self.on_feedback(engine, node, seq, ack),
            DupEvent::StatusReport { node, seq } => {
                self.on_status_report(node, seq);
                Ok(())
            }
        }
    }

    pub fn run(&mut self, engine: &mut Engine<DupEvent>, stop: Stop) -> Result<Slot, DupstatError> {
        Ok(engine.run_until(stop, |eng, ev| self.handle(eng, ev.payload))?)
    }
}

pub fn link_streams(cfg: &DupstatConfig, seed: u64) -> Vec<RngStream> {
    (0..cfg.links.len())
        .map(|i| RngStream::new(seed, format!("dupstat/link:{i}")))
        .collect()
}

/// Per-packet outcome of one mode.
#[derive(Debug, Clone)]
pub struct ModeOutcome {
    pub mode: Mode,
    pub records: Vec<DeliveryRecord>,
    pub counters: CounterSet,
}

fn poisson_count(u: &mut RngStream, mean: f64) -> u64 {
    // Knuth's product method; means here are well below 30.
    let limit = (-mean).exp();
    let mut k = 0;
    let mut prod = u.uniform();
    while prod > limit {
        k += 1;
        prod *= u.uniform();
    }
    k
}

/// Arrival slots of the Poisson process, shared by all modes.
pub fn poisson_arrivals(cfg: &DupstatConfig, seed: u64) -> Vec<Slot> {
    let mut rng = RngStream::new(seed, "dupstat/arrivals");
    let mut out = Vec::with_capacity(cfg.packets as usize);
    let mut slot = 0;
    while (out.len() as u64) < cfg.packets {
        for _ in 0..poisson_count(&mut rng, cfg.arrival_rate_per_slot) {
            if (out.len() as u64) < cfg.packets {
                out.push(slot);
            }
        }
        slot += 1;
    }
    out
}

/// Simulate every packet of the configured experiment in `mode`.
pub fn simulate_mode(cfg: &DupstatConfig, seed: u64, mode: Mode) -> Result<ModeOutcome, DupstatError> {
    let streams = link_streams(cfg, seed);
    let clock = SlotClock::new(cfg.slot_duration_ms)?;
    match cfg.arrival {
        ArrivalProcess::Isolated => {
            let parts = batch::map(batch::chunks(cfg.packets, EPISODE_CHUNK), |range| {
                let mut engine = Engine::new(clock);
                let mut records = Vec::with_capacity((range.end - range.start) as usize);
                let mut counters = CounterSet::new();
                for seq in range {
                    engine.reset();
                    let mut sim = DuplicationSim::new(cfg, mode, &streams);
                    engine.schedule(0, PRIO_ARRIVAL, DupEvent::Arrival { seq })?;
                    sim.run(&mut engine, Stop::Drained)?;
                    let (r, c) = sim.into_records();
                    records.extend(r);
                    counters.merge(&c);
                }
                Ok::<_, DupstatError>((records, counters))
            });
            let mut records = Vec::with_capacity(cfg.packets as usize);
            let mut counters = CounterSet::new();
            for p in parts {
                let (r, c) = p?;
                records.extend(r);
                counters.merge(&c);
            }
            Ok(ModeOutcome { mode, records, counters })
        }
        ArrivalProcess::Poisson => {
            let mut engine = Engine::new(clock);
            let mut sim = DuplicationSim::new(cfg, mode, &streams);
            for (seq, slot) in poisson_arrivals(cfg, seed).into_iter().enumerate() {
                engine.schedule(slot, PRIO_ARRIVAL, DupEvent::Arrival { seq: seq as Seq })?;
            }
            sim.run(&mut engine, Stop::Drained)?;
            let (records, counters) = sim.into_records();
            Ok(ModeOutcome { mode, records, counters })
        }
    }
}

/// Mergeable per-mode metrics.
#[derive(Debug, Clone)]
pub struct ModeAccumulator {
    pub mode: Mode,
    pub latency: EmpiricalDistribution,
    pub counters: CounterSet,
}

impl ModeAccumulator {
    pub fn from_outcome(o: &ModeOutcome) -> Self {
        let mut latency = EmpiricalDistribution::new();
        let mut counters = o.counters.clone();
        counters.incr("packets", o.records.len() as u64);
        for r in &o.records {
            latency.push(r.latency().map_or(f64::INFINITY, |l| l as f64));
        }
        Self {
            mode: o.mode,
            latency,
            counters,
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        debug_assert_eq!(self.mode, other.mode);
        let mut counters = self.counters.clone();
        counters.merge(&other.counters);
        Self {
            mode: self.mode,
            latency: self.latency.merge(&other.latency),
            counters,
        }
    }

    pub fn tx_per_delivered(&self) -> f64 {
        self.counters.get("transmissions") as f64 / self.counters.get("delivered") as f64
    }
}

#[derive(Debug, Clone)]
pub struct DupstatRun {
    pub modes: Vec<ModeAccumulator>,
}

/// Run every configured mode with coupled streams.
pub fn run_duplication_experiment(cfg: &DupstatConfig, seed: u64) -> Result<DupstatRun, DupstatError> {
    cfg.validate()?;
    let mut modes = Vec::with_capacity(cfg.modes.len());
    for &m in &cfg.modes {
        modes.push(ModeAccumulator::from_outcome(&simulate_mode(cfg, seed, m)?));
    }
    Ok(DupstatRun { modes })
}

impl DupstatRun {
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            modes: self
                .modes
                .iter()
                .zip(&other.modes)
                .map(|(a, b)| a.merge(b))
                .collect(),
        }
    }

    pub fn mode(&self, m: Mode) -> Option<&ModeAccumulator> {
        self.modes.iter().find(|a| a.mode == m)
    }
}

pub const CSV_HEADER: [&str; 7] = [
    "mode",
    "packets",
    "tx_per_delivered",
    "latency_p50",
    "latency_at_outage_1e-3",
    "latency_at_outage_target",
    "analytic_latency_at_target",
];

#[derive(Debug, Clone, Serialize)]
pub struct ModeSummary {
    pub mode: Mode,
    pub packets: u64,
    pub delivered: u64,
    pub transmissions: u64,
    pub tx_per_delivered: f64,
    pub reports_emitted: u64,
    pub latency_mean: f64,
    pub latency_p50: f64,
    pub outage_1e3: OutageEstimate,
    pub outage_target: OutageEstimate,
    pub analytic_latency_at_target: u64,
    pub counters: CounterSet,
}

pub fn summarize(cfg: &DupstatConfig, acc: &ModeAccumulator) -> ModeSummary {
    let l = &acc.latency;
    ModeSummary {
        mode: acc.mode,
        packets: acc.counters.get("packets"),
        delivered: acc.counters.get("delivered"),
        transmissions: acc.counters.get("transmissions"),
        tx_per_delivered: acc.tx_per_delivered(),
        reports_emitted: acc.counters.get("reports_emitted"),
        latency_mean: l.mean().unwrap_or(f64::NAN),
        latency_p50: l.percentile(50.0).unwrap_or(f64::NAN),
        outage_1e3: l.outage_latency(1e-3).unwrap_or(OutageEstimate {
            value: f64::NAN,
            reliable: false,
        }),
        outage_target: l.outage_latency(cfg.outage_target).unwrap_or(OutageEstimate {
            value: f64::NAN,
            reliable: false,
        }),
        analytic_latency_at_target: cfg.analytic_outage_latency(acc.mode, cfg.outage_target),
        counters: acc.counters.clone(),
    }
}

pub fn results_table(cfg: &DupstatConfig, run: &DupstatRun) -> Table {
    let mut t = Table::new(&CSV_HEADER);
    for acc in &run.modes {
        let s = summarize(cfg, acc);
        t.push(vec![
            s.mode.as_str().into(),
            s.packets.to_string(),
            fmt_f64(s.tx_per_delivered),
            fmt_f64(s.latency_p50),
            fmt_f64(s.outage_1e3.value),
            fmt_f64(s.outage_target.value),
            s.analytic_latency_at_target.to_string(),
        ]);
    }
    t
}
