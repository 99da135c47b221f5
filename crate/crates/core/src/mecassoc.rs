//! Computation-aware decoupled uplink association for MEC offloading in a
//! two-tier HetNet.
//!
//! The conventional rule attaches both directions to the max-RSRP node. The
//! decoupled rule keeps that downlink choice but sends the uplink to the node
//! minimising the predicted extended packet delay budget (E-PDB): uplink
//! transmission time plus queueing and execution at the collocated MEC
//! server. Servers are work-conserving FIFO queues, and tasks are admitted
//! one after another without departures.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{check_positive, ConfigError};
use crate::engine::RngStream;
use crate::metrics::EmpiricalDistribution;
use crate::radio::{db_to_linear, dbm_to_mw, noise_dbm, rsrp, shannon_rate, PathlossModel, RadioError};
use crate::report::{fmt_f64, Table};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MecError {
    #[error("uplink rate must be positive, got {0} bit/s")]
    NonPositiveRate(f64),
    #[error("no radio node to associate with")]
    NoNodes,
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Macro,
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierProfile {
    pub tier: Tier,
    pub tx_power_dbm: f64,
    pub nodes: u32,
    /// MEC cycle rate of each node of the tier, cycles/s.
    pub cpu_hz: f64,
}

/// Inter-tier cross-domain resource disparity: the linear transmit-power
/// ratio over the compute-rate ratio of the two tiers.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct DisparityOmega(pub f64);

impl DisparityOmega {
    pub fn from_tiers(macro_tier: &TierProfile, small: &TierProfile) -> Self {
        let power = db_to_linear(macro_tier.tx_power_dbm - small.tx_power_dbm);
        Self(power / (macro_tier.cpu_hz / small.cpu_hz))
    }

    /// Macro cycle rate that realises `omega` given the tier powers.
    pub fn macro_cpu_hz(self, macro_dbm: f64, small_dbm: f64, small_cpu_hz: f64) -> f64 {
        small_cpu_hz * db_to_linear(macro_dbm - small_dbm) / self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MecServer {
    pub host: usize,
    pub cpu_hz: f64,
    /// Queued workload, cycles.
    pub queue_cycles: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffloadTask {
    pub bits: f64,
    pub cycles_per_bit: f64,
}

impl OffloadTask {
    pub fn workload(&self) -> f64 {
        self.bits * self.cycles_per_bit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationDecision {
    pub dl: usize,
    pub ul: usize,
}

/// One radio node as seen from one UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeView {
    pub id: usize,
    pub distance_m: f64,
    pub pathloss_db: f64,
    pub rsrp_dbm: f64,
    pub ul_rate_bps: f64,
}

/// Predicted E-PDB without touching the queue.
pub fn predicted_epdb(task: &OffloadTask, ul_rate: f64, server: &MecServer) -> Result<f64, MecError> {
    if !(ul_rate > 0.0) {
        return Err(MecError::NonPositiveRate(ul_rate));
    }
    Ok(task.bits / ul_rate + (server.queue_cycles + task.workload()) / server.cpu_hz)
}

/// E-PDB of `task` on `server`, admitting it (the queue grows by `L·w`).
pub fn e_pdb(task: &OffloadTask, ul_rate: f64, server: &mut MecServer) -> Result<f64, MecError> {
    let d = predicted_epdb(task, ul_rate, server)?;
    server.queue_cycles += task.workload();
    Ok(d)
}

fn max_rsrp(nodes: &[NodeView]) -> Result<usize, MecError> {
    nodes
        .iter()
        .min_by(|a, b| {
            b.rsrp_dbm
                .total_cmp(&a.rsrp_dbm)
                .then(a.distance_m.total_cmp(&b.distance_m))
                .then(a.id.cmp(&b.id))
        })
        .map(|n| n.id)
        .ok_or(MecError::NoNodes)
}

pub fn coupled_association(nodes: &[NodeView]) -> Result<AssociationDecision, MecError> {
    let best = max_rsrp(nodes)?;
    Ok(AssociationDecision { dl: best, ul: best })
}

/// DL by max RSRP; UL by minimum predicted E-PDB (ties: smaller pathloss,
/// then lower id). `servers[id]` is the server collocated with node `id`.
pub fn decoupled_mec_association(
    task: &OffloadTask,
    nodes: &[NodeView],
    servers: &[MecServer],
) -> Result<AssociationDecision, MecError> {
    let dl = max_rsrp(nodes)?;
    let mut best: Option<(f64, &NodeView)> = None;
    for n in nodes {
        let d = predicted_epdb(task, n.ul_rate_bps, &servers[n.id])?;
        let better = match best {
            None => true,
            Some((bd, bn)) => match d.total_cmp(&bd) {
                Ordering::Less => true,
                Ordering::Equal => (n.pathloss_db, n.id) < (bn.pathloss_db, bn.id),
                Ordering::Greater => false,
            },
        };
        if better {
            best = Some((d, n));
        }
    }
    let (_, ul) = best.ok_or(MecError::NoNodes)?;
    Ok(AssociationDecision { dl, ul: ul.id })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TaskSize {
    Fixed { bits: f64 },
    Uniform { min_bits: f64, max_bits: f64 },
    Exponential { mean_bits: f64 },
}

impl TaskSize {
    fn draw(&self, rng: &mut RngStream) -> f64 {
        match *self {
            TaskSize::Fixed { bits } => bits,
            TaskSize::Uniform { min_bits, max_bits } => min_bits + (max_bits - min_bits) * rng.uniform(),
            TaskSize::Exponential { mean_bits } => crate::engine::exponential(rng, mean_bits),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        match *self {
            TaskSize::Fixed { bits } => check_positive("mecassoc.task_size.bits", bits),
            TaskSize::Uniform { min_bits, max_bits } => {
                check_positive("mecassoc.task_size.min_bits", min_bits)?;
                if max_bits < min_bits {
                    return Err(ConfigError::invalid("mecassoc.task_size.max_bits", "must be >= min_bits"));
                }
                Ok(())
            }
            TaskSize::Exponential { mean_bits } => check_positive("mecassoc.task_size.mean_bits", mean_bits),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MecassocConfig {
    pub macro_tx_power_dbm: f64,
    pub small_tx_power_dbm: f64,
    pub small_nodes: u32,
    pub radius_m: f64,
    pub ues: u32,
    pub small_cpu_hz: f64,
    pub omega: f64,
    pub task_size: TaskSize,
    pub cycles_per_bit: f64,
    pub ul_bandwidth_hz: f64,
    pub ue_tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub min_distance_m: f64,
    pub macro_pathloss: PathlossModel,
    pub small_pathloss: PathlossModel,
    /// Node antenna gains, applied in both directions.
    pub macro_antenna_gain_dbi: f64,
    pub small_antenna_gain_dbi: f64,
    /// Tasks see the queues left by earlier UEs; when false every task
    /// finds idle servers.
    pub sequential_admission: bool,
    pub ccdf_points: usize,
}

impl Default for MecassocConfig {
    fn default() -> Self {
        Self {
            macro_tx_power_dbm: 46.0,
            small_tx_power_dbm: 30.0,
            small_nodes: 12,
            radius_m: 500.0,
            ues: 300,
            small_cpu_hz: 1e10,
            omega: 2.0,
            task_size: TaskSize::Uniform {
                min_bits: 2e5,
                max_bits: 6e5,
            },
            cycles_per_bit: 1000.0,
            ul_bandwidth_hz: 10e6,
            ue_tx_power_dbm: 23.0,
            noise_figure_db: 9.0,
            min_distance_m: 10.0,
            macro_pathloss: PathlossModel::macro_urban(),
            small_pathloss: PathlossModel::small_urban(),
            macro_antenna_gain_dbi: 17.0,
            small_antenna_gain_dbi: 5.0,
            sequential_admission: true,
            ccdf_points: 200,
        }
    }
}

impl MecassocConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.macro_tx_power_dbm < self.small_tx_power_dbm {
            return Err(ConfigError::invalid(
                "mecassoc.macro_tx_power_dbm",
                "macro tier must transmit at least as much as the small tier",
            ));
        }
        check_positive("mecassoc.radius_m", self.radius_m)?;
        check_positive("mecassoc.small_cpu_hz", self.small_cpu_hz)?;
        check_positive("mecassoc.omega", self.omega)?;
        check_positive("mecassoc.cycles_per_bit", self.cycles_per_bit)?;
        check_positive("mecassoc.ul_bandwidth_hz", self.ul_bandwidth_hz)?;
        check_positive("mecassoc.min_distance_m", self.min_distance_m)?;
        if self.ues == 0 {
            return Err(ConfigError::invalid("mecassoc.ues", "must be at least 1"));
        }
        if self.ccdf_points < 2 {
            return Err(ConfigError::invalid("mecassoc.ccdf_points", "must be at least 2"));
        }
        self.task_size.validate()
    }

    pub fn macro_tier(&self) -> TierProfile {
        TierProfile {
            tier: Tier::Macro,
            tx_power_dbm: self.macro_tx_power_dbm,
            nodes: 1,
            cpu_hz: DisparityOmega(self.omega).macro_cpu_hz(
                self.macro_tx_power_dbm,
                self.small_tx_power_dbm,
                self.small_cpu_hz,
            ),
        }
    }

    pub fn small_tier(&self) -> TierProfile {
        TierProfile {
            tier: Tier::Small,
            tx_power_dbm: self.small_tx_power_dbm,
            nodes: self.small_nodes,
            cpu_hz: self.small_cpu_hz,
        }
    }

    pub fn omega(&self) -> DisparityOmega {
        DisparityOmega::from_tiers(&self.macro_tier(), &self.small_tier())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioNode {
    pub id: usize,
    pub tier: Tier,
    pub pos: (f64, f64),
    pub tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub pathloss: PathlossModel,
}

/// Node placement, UE placement and task draws of one drop.
#[derive(Debug, Clone)]
pub struct Drop {
    pub nodes: Vec<RadioNode>,
    pub servers: Vec<MecServer>,
    pub ues: Vec<(f64, f64)>,
    pub tasks: Vec<OffloadTask>,
}

fn in_disc(rng: &mut RngStream, radius: f64) -> (f64, f64) {
    let r = radius * rng.uniform().sqrt();
    let a = 2.0 * PI * rng.uniform();
    (r * a.cos(), r * a.sin())
}

impl Drop {
    pub fn generate(cfg: &MecassocConfig, seed: u64) -> Self {
        let macro_tier = cfg.macro_tier();
        let mut node_rng = RngStream::new(seed, "mecassoc/nodes");
        let mut nodes = vec![RadioNode {
            id: 0,
            tier: Tier::Macro,
            pos: (0.0, 0.0),
            tx_power_dbm: cfg.macro_tx_power_dbm,
            antenna_gain_dbi: cfg.macro_antenna_gain_dbi,
            pathloss: cfg.macro_pathloss,
        }];
        for i in 0..cfg.small_nodes as usize {
            nodes.push(RadioNode {
                id: i + 1,
                tier: Tier::Small,
                pos: in_disc(&mut node_rng, cfg.radius_m),
                tx_power_dbm: cfg.small_tx_power_dbm,
                antenna_gain_dbi: cfg.small_antenna_gain_dbi,
                pathloss: cfg.small_pathloss,
            });
        }
        let servers = nodes
            .iter()
            .map(|n| MecServer {
                host: n.id,
                cpu_hz: match n.tier {
                    Tier::Macro => macro_tier.cpu_hz,
                    Tier::Small => cfg.small_cpu_hz,
                },
                queue_cycles: 0.0,
            })
            .collect();
        let mut ue_rng = RngStream::new(seed, "mecassoc/ues");
        let ues = (0..cfg.ues).map(|_| in_disc(&mut ue_rng, cfg.radius_m)).collect();
        let mut task_rng = RngStream::new(seed, "mecassoc/tasks");
        let tasks = (0..cfg.ues)
            .map(|_| OffloadTask {
                bits: cfg.task_size.draw(&mut task_rng),
                cycles_per_bit: cfg.cycles_per_bit,
            })
            .collect();
        Self {
            nodes,
            servers,
            ues,
            tasks,
        }
    }

    pub fn views(&self, cfg: &MecassocConfig, ue: usize) -> Result<Vec<NodeView>, MecError> {
        let (x, y) = self.ues[ue];
        let noise = dbm_to_mw(noise_dbm(cfg.ul_bandwidth_hz, cfg.noise_figure_db));
        self.nodes
            .iter()
            .map(|n| {
                let d = (x - n.pos.0).hypot(y - n.pos.1).max(cfg.min_distance_m);
                // Coupling loss: pathloss net of the node's antenna gain.
                let pl = n.pathloss.pathloss_db(d)? - n.antenna_gain_dbi;
                let snr = dbm_to_mw(cfg.ue_tx_power_dbm - pl) / noise;
                Ok(NodeView {
                    id: n.id,
                    distance_m: d,
                    pathloss_db: pl,
                    rsrp_dbm: rsrp(n.tx_power_dbm, pl),
                    ul_rate_bps: shannon_rate(snr, cfg.ul_bandwidth_hz)?,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssociationRule {
    Coupled,
    Decoupled,
}

impl AssociationRule {
    pub fn as_str(self) -> &'static str {
        match self {
            AssociationRule::Coupled => "coupled",
            AssociationRule::Decoupled => "decoupled",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RuleOutcome {
    pub rule: AssociationRule,
    pub decisions: Vec<AssociationDecision>,
    pub epdb_s: Vec<f64>,
    /// Decisions where the chosen UL node predicted more than the coupled
    /// node under the same queue snapshot (always 0 for the decoupled rule).
    pub dominance_violations: u32,
}

pub fn run_rule(cfg: &MecassocConfig, drop: &Drop, rule: AssociationRule) -> Result<RuleOutcome, MecError> {
    let mut servers = drop.servers.clone();
    let mut decisions = Vec::with_capacity(drop.ues.len());
    let mut epdb_s = Vec::with_capacity(drop.ues.len());
    let mut dominance_violations = 0;
    for ue in 0..drop.ues.len() {
        if !cfg.sequential_admission {
            servers.iter_mut().for_each(|s| s.queue_cycles = 0.0);
        }
        let views = drop.views(cfg, ue)?;
        let task = &drop.tasks[ue];
        let decision = match rule {
            AssociationRule::Coupled => coupled_association(&views)?,
            AssociationRule::Decoupled => decoupled_mec_association(task, &views, &servers)?,
        };
        let coupled_ul = coupled_association(&views)?.ul;
        let at_coupled = predicted_epdb(task, views[coupled_ul].ul_rate_bps, &servers[coupled_ul])?;
        let d = e_pdb(task, views[decision.ul].ul_rate_bps, &mut servers[decision.ul])?;
        if d > at_coupled {
            dominance_violations += 1;
        }
        decisions.push(decision);
        epdb_s.push(d);
    }
    Ok(RuleOutcome {
        rule,
        decisions,
        epdb_s,
        dominance_violations,
    })
}

#[derive(Debug, Clone)]
pub struct RuleAccumulator {
    pub rule: AssociationRule,
    pub epdb: EmpiricalDistribution,
    pub dominance_violations: u64,
}

impl RuleAccumulator {
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            rule: self.rule,
            epdb: self.epdb.merge(&other.epdb),
            dominance_violations: self.dominance_violations + other.dominance_violations,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MecassocRun {
    pub omega: DisparityOmega,
    pub coupled: RuleAccumulator,
    pub decoupled: RuleAccumulator,
}

impl MecassocRun {
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            omega: self.omega,
            coupled: self.coupled.merge(&other.coupled),
            decoupled: self.decoupled.merge(&other.decoupled),
        }
    }

    /// Relative E-PDB reduction of the decoupled rule at percentile `q`.
    pub fn reduction_at(&self, q: f64) -> f64 {
        let c = self.coupled.epdb.percentile(q).unwrap_or(f64::NAN);
        let d = self.decoupled.epdb.percentile(q).unwrap_or(f64::NAN);
        1.0 - d / c
    }
}

pub fn run_offload_experiment(cfg: &MecassocConfig, seed: u64) -> Result<MecassocRun, MecError> {
    cfg.validate()?;
    let drop = Drop::generate(cfg, seed);
    let acc = |o: RuleOutcome| RuleAccumulator {
        rule: o.rule,
        epdb: o.epdb_s.iter().copied().collect(),
        dominance_violations: u64::from(o.dominance_violations),
    };
    Ok(MecassocRun {
        omega: cfg.omega(),
        coupled: acc(run_rule(cfg, &drop, AssociationRule::Coupled)?),
        decoupled: acc(run_rule(cfg, &drop, AssociationRule::Decoupled)?),
    })
}

pub const CSV_HEADER: [&str; 3] = ["rule", "p50_epdb", "p95_epdb"];
pub const CCDF_HEADER: [&str; 3] = ["rule", "value", "ccdf"];

pub fn results_table(run: &MecassocRun) -> Table {
    let mut t = Table::new(&CSV_HEADER);
    for acc in [&run.coupled, &run.decoupled] {
        let q = |x| acc.epdb.percentile(x).map(fmt_f64).unwrap_or_else(|_| "nan".into());
        t.push(vec![acc.rule.as_str().into(), q(50.0), q(95.0)]);
    }
    t
}

pub fn ccdf_table(cfg: &MecassocConfig, run: &MecassocRun) -> Table {
    let mut t = Table::new(&CCDF_HEADER);
    for acc in [&run.coupled, &run.decoupled] {
        for (x, p) in acc.epdb.ccdf_dump(None, cfg.ccdf_points) {
            t.push(vec![acc.rule.as_str().into(), fmt_f64(x), fmt_f64(p)]);
        }
    }
    t
}
