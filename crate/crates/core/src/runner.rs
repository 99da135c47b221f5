//! Seeded replications of one scenario, and the tables and summary they
//! produce.
//!
//! Replication `i` runs on [`replication_seed`]`(master, i)`, so adding runs
//! never changes earlier ones. Runs may execute concurrently; results are
//! merged in run order.

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::batch;
use crate::ccselect::{self, CcselectError, CcselectRun};
use crate::compcoord::{self, CompcoordRun, UserClass};
use crate::config::{ConfigError, Mechanism, MechanismConfig, ScenarioConfig};
use crate::dupstat::{self, DupstatError, DupstatRun, Mode};
use crate::engine::derive_seed;
use crate::mecassoc::{self, MecError, MecassocRun};
use crate::metrics::EmpiricalDistribution;
use crate::report::{fmt_f64, Table};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dupstat(#[from] DupstatError),
    #[error(transparent)]
    Ccselect(#[from] CcselectError),
    #[error(transparent)]
    Mecassoc(#[from] MecError),
}

impl RunError {
    /// True when the failure is a configuration problem rather than a
    /// runtime one.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            RunError::Config(_)
                | RunError::Dupstat(DupstatError::Config(_))
                | RunError::Ccselect(CcselectError::Config(_))
                | RunError::Mecassoc(MecError::Config(_))
        )
    }
}

pub fn replication_seed(master_seed: u64, run: u32) -> u64 {
    derive_seed(master_seed, &format!("run:{run}"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the canonical (fully defaulted) config document.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let doc = serde_json::to_vec(&cfg.to_document()).expect("config serializes");
    sha256_hex(&doc)
}

/// Identifies an invocation; written before any simulation starts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub mechanism: Mechanism,
    pub config_path: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub run_count: u32,
    pub output_dir: String,
    pub tool_version: String,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }
}

/// Result of one replication (or a merge of several).
#[derive(Debug, Clone)]
pub enum MechanismRun {
    Dupstat(DupstatRun),
    Ccselect(CcselectRun),
    Mecassoc(MecassocRun),
    Compcoord(CompcoordRun),
}

impl MechanismRun {
    pub fn merge(&self, other: &Self) -> Self {
        match (self, other) {
            (Self::Dupstat(a), Self::Dupstat(b)) => Self::Dupstat(a.merge(b)),
            (Self::Ccselect(a), Self::Ccselect(b)) => Self::Ccselect(a.merge(b)),
            (Self::Mecassoc(a), Self::Mecassoc(b)) => Self::Mecassoc(a.merge(b)),
            (Self::Compcoord(a), Self::Compcoord(b)) => Self::Compcoord(a.merge(b)),
            _ => panic!("merging runs of different mechanisms"),
        }
    }

    pub fn results_table(&self, cfg: &MechanismConfig) -> Table {
        match (self, cfg) {
            (Self::Dupstat(r), MechanismConfig::Dupstat(c)) => dupstat::results_table(c, r),
            (Self::Ccselect(r), _) => ccselect::results_table(r),
            (Self::Mecassoc(r), _) => mecassoc::results_table(r),
            (Self::Compcoord(r), _) => compcoord::results_table(r),
            _ => panic!("run and config are for different mechanisms"),
        }
    }

    /// Additional named tables (file stem suffix, table).
    pub fn extra_tables(&self, cfg: &MechanismConfig) -> Vec<(&'static str, Table)> {
        match (self, cfg) {
            (Self::Dupstat(r), MechanismConfig::Dupstat(c)) => vec![("latency", dupstat_latency_table(c, r))],
            (Self::Mecassoc(r), MechanismConfig::Mecassoc(c)) => vec![("ccdf", mecassoc::ccdf_table(c, r))],
            _ => Vec::new(),
        }
    }
}

/// Empirical latency pmf next to the geometric closed form, per mode.
pub fn dupstat_latency_table(cfg: &dupstat::DupstatConfig, run: &DupstatRun) -> Table {
    let mut t = Table::new(&["mode", "latency_slots", "count", "empirical_pmf", "analytic_pmf"]);
    for acc in &run.modes {
        let n = acc.latency.count() as f64;
        let p = cfg.round_failure_probability(acc.mode);
        for (v, c) in acc.latency.value_counts() {
            if !v.is_finite() {
                continue;
            }
            let round = (v as u64).saturating_sub(1) / cfg.harq_rtt_slots;
            let analytic = if (v as u64).saturating_sub(1).is_multiple_of(cfg.harq_rtt_slots) {
                dupstat::geometric_latency_pmf(p, round + 1)
            } else {
                0.0
            };
            t.push(vec![
                acc.mode.as_str().into(),
                fmt_f64(v),
                c.to_string(),
                fmt_f64(c as f64 / n),
                fmt_f64(analytic),
            ]);
        }
    }
    t
}

/// The mechanism config with the scenario's sample budget applied.
pub fn effective_mechanism(cfg: &ScenarioConfig) -> MechanismConfig {
    let mut m = cfg.mechanism.clone();
    if let Some(n) = cfg.sample_budget {
        m.set_sample_budget(n);
    }
    m
}

pub fn run_once(mech: &MechanismConfig, seed: u64) -> Result<MechanismRun, RunError> {
    Ok(match mech {
        MechanismConfig::Dupstat(c) => MechanismRun::Dupstat(dupstat::run_duplication_experiment(c, seed)?),
        MechanismConfig::Ccselect(c) => MechanismRun::Ccselect(ccselect::run_carrier_experiment(c, seed)?),
        MechanismConfig::Mecassoc(c) => MechanismRun::Mecassoc(mecassoc::run_offload_experiment(c, seed)?),
        MechanismConfig::Compcoord(c) => MechanismRun::Compcoord(compcoord::run_comp_experiment(c, seed)?),
    })
}

#[derive(Debug, Clone)]
pub struct Replications {
    pub mechanism: MechanismConfig,
    pub seeds: Vec<u64>,
    pub runs: Vec<MechanismRun>,
    pub merged: MechanismRun,
}

/// Run every replication of `cfg` on at most `jobs` threads (0 = all).
pub fn run_replications(cfg: &ScenarioConfig, jobs: usize) -> Result<Replications, RunError> {
    cfg.validate()?;
    let mechanism = effective_mechanism(cfg);
    mechanism.validate()?;
    let seeds: Vec<u64> = (0..cfg.run_count).map(|i| replication_seed(cfg.master_seed, i)).collect();
    let runs = batch::with_jobs(jobs, || batch::map(seeds.clone(), |s| run_once(&mechanism, s)))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let merged = runs[1..].iter().fold(runs[0].clone(), |acc, r| acc.merge(r));
    Ok(Replications {
        mechanism,
        seeds,
        runs,
        merged,
    })
}

impl Replications {
    pub fn results_table(&self) -> Table {
        self.merged.results_table(&self.mechanism)
    }

    /// Every run's own results, prefixed by run index and seed.
    pub fn runs_table(&self) -> Table {
        let mut out: Option<Table> = None;
        for (i, (run, seed)) in self.runs.iter().zip(&self.seeds).enumerate() {
            let t = run
                .results_table(&self.mechanism)
                .with_leading_column("seed", &seed.to_string())
                .with_leading_column("run", &i.to_string());
            match &mut out {
                None => out = Some(t),
                Some(o) => o.append(&t),
            }
        }
        out.expect("at least one run")
    }

    pub fn extra_tables(&self) -> Vec<(&'static str, Table)> {
        self.merged.extra_tables(&self.mechanism)
    }

    /// Headline metrics of the merged result.
    pub fn metrics(&self) -> Value {
        match (&self.merged, &self.mechanism) {
            (MechanismRun::Dupstat(r), MechanismConfig::Dupstat(c)) => dupstat_metrics(c, r),
            (MechanismRun::Ccselect(r), _) => ccselect_metrics(r),
            (MechanismRun::Mecassoc(r), _) => mecassoc_metrics(r),
            (MechanismRun::Compcoord(r), _) => compcoord_metrics(r),
            _ => unreachable!("run matches its config"),
        }
    }

    pub fn summary(&self, cfg: &ScenarioConfig, defaulted: &[String], manifest_hash: &str) -> Value {
        json!({
            "mechanism": cfg.mechanism.mechanism(),
            "manifest_hash": manifest_hash,
            "config_hash": config_hash(cfg),
            "master_seed": cfg.master_seed,
            "run_seeds": self.seeds,
            "config": cfg.to_document(),
            "defaulted": defaulted,
            "metrics": self.metrics(),
        })
    }
}

fn percentiles(d: &EmpiricalDistribution, qs: &[f64]) -> Value {
    let mut m = serde_json::Map::new();
    for &q in qs {
        m.insert(format!("p{q}"), num(d.percentile(q).unwrap_or(f64::NAN)));
    }
    m.insert("samples".into(), d.count().into());
    m.insert("exact".into(), d.is_exact().into());
    Value::Object(m)
}

/// JSON has no NaN or infinity; those become null.
fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn dupstat_metrics(cfg: &dupstat::DupstatConfig, r: &DupstatRun) -> Value {
    let modes: Vec<_> = r.modes.iter().map(|a| dupstat::summarize(cfg, a)).collect();
    let get = |m: Mode| modes.iter().find(|s| s.mode == m);
    let mut out = json!({ "modes": modes });
    if let (Some(sc), Some(mc)) = (get(Mode::Sc), get(Mode::Mc)) {
        out["outage_latency_reduction_mc_vs_sc"] = num(1.0 - mc.outage_target.value / sc.outage_target.value);
        out["analytic_outage_latency_reduction_mc_vs_sc"] =
            num(1.0 - mc.analytic_latency_at_target as f64 / sc.analytic_latency_at_target as f64);
        out["tx_ratio_mc_vs_sc"] = num(mc.tx_per_delivered / sc.tx_per_delivered);
        out["outage_reliable"] = (sc.outage_target.reliable && mc.outage_target.reliable).into();
    }
    if let (Some(mc), Some(d)) = (get(Mode::Mc), get(Mode::McDiscard)) {
        out["tx_efficiency_gain_discard_vs_mc"] = num(1.0 - d.tx_per_delivered / mc.tx_per_delivered);
    }
    out
}

fn ccselect_metrics(r: &CcselectRun) -> Value {
    let qs = [5.0, 50.0, 95.0];
    let improved = r
        .baseline
        .jain
        .iter()
        .zip(&r.proposed.jain)
        .filter(|(b, p)| p > b)
        .count();
    let policy = |a: &ccselect::PolicyAccumulator| {
        json!({
            "throughput_bps": percentiles(&a.all, &qs),
            "mean_by_ccs": a.by_ccs.iter().map(|d| d.mean().map_or(Value::Null, num)).collect::<Vec<_>>(),
            "blocked_fraction": num(a.blocked_fraction()),
            "mean_jain": num(a.mean_jain()),
        })
    };
    json!({
        "baseline": policy(&r.baseline),
        "proposed": policy(&r.proposed),
        "gain_p5": num(r.gain_at(5.0)),
        "gain_p50": num(r.gain_at(50.0)),
        "gain_p95": num(r.gain_at(95.0)),
        "jain_improved_runs": improved,
        "runs": r.baseline.jain.len(),
    })
}

fn mecassoc_metrics(r: &MecassocRun) -> Value {
    let qs = [50.0, 90.0, 95.0];
    let ccdf = |d: &EmpiricalDistribution, x: f64| num(d.ccdf_at(x).unwrap_or(f64::NAN));
    let mut at = serde_json::Map::new();
    for q in [50.0, 90.0] {
        let x = r.coupled.epdb.percentile(q).unwrap_or(f64::NAN);
        at.insert(
            format!("coupled_p{q}"),
            json!({
                "epdb_s": num(x),
                "coupled_ccdf": ccdf(&r.coupled.epdb, x),
                "decoupled_ccdf": ccdf(&r.decoupled.epdb, x),
            }),
        );
    }
    json!({
        "omega": num(r.omega.0),
        "coupled_epdb_s": percentiles(&r.coupled.epdb, &qs),
        "decoupled_epdb_s": percentiles(&r.decoupled.epdb, &qs),
        "reduction_p50": num(r.reduction_at(50.0)),
        "reduction_p90": num(r.reduction_at(90.0)),
        "ccdf_at_coupled_percentiles": at,
        "decoupled_dominance_violations": r.decoupled.dominance_violations,
    })
}

fn compcoord_metrics(r: &CompcoordRun) -> Value {
    let mut schemes = serde_json::Map::new();
    for s in compcoord::SCHEMES {
        for c in [UserClass::Llu, UserClass::Ltu] {
            if let Some(d) = r.get(s, c) {
                let mut v = percentiles(d, &[50.0, 99.0]);
                v["mean"] = d.mean().map_or(Value::Null, num);
                schemes.insert(format!("{s}/{}", c.as_str()), v);
            }
        }
    }
    json!({
        "episodes": r.episodes,
        "decisions": r.decisions,
        "latency_slots": schemes,
        "llu_reduction": num(r.llu_reduction()),
    })
}
