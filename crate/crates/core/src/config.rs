//! Scenario configuration: one JSON document, one mechanism block.
//!
//! Unknown keys are rejected at every level. Missing keys take their
//! defaults, and [`LoadedConfig::defaulted`] lists which ones did so the
//! summary can echo them.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ccselect::CcselectConfig;
use crate::compcoord::CompcoordConfig;
use crate::dupstat::DupstatConfig;
use crate::mecassoc::MecassocConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("config must contain exactly one mechanism block, found {0:?}")]
    MechanismCount(Vec<String>),
    #[error("config block is for `{found}` but `{expected}` was requested")]
    WrongMechanism { expected: String, found: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub fn check_positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, format!("must be positive and finite, got {v}")))
    }
}

pub fn check_probability(field: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, format!("must lie in [0, 1], got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Dupstat,
    Ccselect,
    Mecassoc,
    Compcoord,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] = [
        Mechanism::Dupstat,
        Mechanism::Ccselect,
        Mechanism::Mecassoc,
        Mechanism::Compcoord,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Dupstat => "dupstat",
            Mechanism::Ccselect => "ccselect",
            Mechanism::Mecassoc => "mecassoc",
            Mechanism::Compcoord => "compcoord",
        }
    }
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MechanismConfig {
    Dupstat(DupstatConfig),
    Ccselect(CcselectConfig),
    Mecassoc(MecassocConfig),
    Compcoord(CompcoordConfig),
}

impl MechanismConfig {
    pub fn default_for(m: Mechanism) -> Self {
        match m {
            Mechanism::Dupstat => Self::Dupstat(DupstatConfig::default()),
            Mechanism::Ccselect => Self::Ccselect(CcselectConfig::default()),
            Mechanism::Mecassoc => Self::Mecassoc(MecassocConfig::default()),
            Mechanism::Compcoord => Self::Compcoord(CompcoordConfig::default()),
        }
    }

    pub fn mechanism(&self) -> Mechanism {
        match self {
            Self::Dupstat(_) => Mechanism::Dupstat,
            Self::Ccselect(_) => Mechanism::Ccselect,
            Self::Mecassoc(_) => Mechanism::Mecassoc,
            Self::Compcoord(_) => Mechanism::Compcoord,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            Self::Dupstat(c) => c.validate(),
            Self::Ccselect(c) => c.validate(),
            Self::Mecassoc(c) => c.validate(),
            Self::Compcoord(c) => c.validate(),
        }
    }

    /// Override the mechanism's main sample count (packets, UEs or episodes).
    pub fn set_sample_budget(&mut self, n: u64) {
        match self {
            Self::Dupstat(c) => c.packets = n,
            Self::Ccselect(c) => c.ues = n.min(u64::from(u32::MAX)) as u32,
            Self::Mecassoc(c) => c.ues = n.min(u64::from(u32::MAX)) as u32,
            Self::Compcoord(c) => c.episodes = n,
        }
    }
}

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub master_seed: u64,
    pub run_count: u32,
    pub sample_budget: Option<u64>,
    pub mechanism: MechanismConfig,
}

impl ScenarioConfig {
    pub fn defaults(m: Mechanism) -> Self {
        Self {
            master_seed: 1,
            run_count: 1,
            sample_budget: None,
            mechanism: MechanismConfig::default_for(m),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.run_count == 0 {
            return Err(ConfigError::invalid("run_count", "must be at least 1"));
        }
        if self.sample_budget == Some(0) {
            return Err(ConfigError::invalid("sample_budget", "must be at least 1"));
        }
        self.mechanism.validate()
    }

    /// The config as it appears in the file format, every default filled in.
    pub fn to_document(&self) -> Value {
        let mut doc = serde_json::Map::new();
        let m = self.mechanism.mechanism();
        doc.insert("mechanism".into(), Value::String(m.as_str().into()));
        doc.insert("master_seed".into(), self.master_seed.into());
        doc.insert("run_count".into(), self.run_count.into());
        doc.insert(
            "sample_budget".into(),
            self.sample_budget.map_or(Value::Null, Value::from),
        );
        let block = match &self.mechanism {
            MechanismConfig::Dupstat(c) => serde_json::to_value(c),
            MechanismConfig::Ccselect(c) => serde_json::to_value(c),
            MechanismConfig::Mecassoc(c) => serde_json::to_value(c),
            MechanismConfig::Compcoord(c) => serde_json::to_value(c),
        }
        .expect("config serializes");
        doc.insert(m.as_str().into(), block);
        Value::Object(doc)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    mechanism: Option<Mechanism>,
    master_seed: Option<u64>,
    run_count: Option<u32>,
    sample_budget: Option<u64>,
    dupstat: Option<DupstatConfig>,
    ccselect: Option<CcselectConfig>,
    mecassoc: Option<MecassocConfig>,
    compcoord: Option<CompcoordConfig>,
}

/// A validated config plus the dotted paths of every value that came from
/// defaults rather than the document.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub defaulted: Vec<String>,
}

fn parse_error(e: serde_json::Error) -> ConfigError {
    ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parse and validate a JSON scenario document.
///
/// `expected` pins the mechanism (e.g. from a CLI subcommand); the document
/// may then omit the block entirely to take all defaults.
pub fn validate_config(raw: &str, expected: Option<Mechanism>) -> Result<LoadedConfig, ConfigError> {
    let parsed: RawScenario = serde_json::from_str(raw).map_err(parse_error)?;
    let source: Value = serde_json::from_str(raw).map_err(parse_error)?;

    let mut present = Vec::new();
    let mut block = None;
    if let Some(c) = parsed.dupstat {
        present.push("dupstat".to_string());
        block = Some(MechanismConfig::Dupstat(c));
    }
    if let Some(c) = parsed.ccselect {
        present.push("ccselect".to_string());
        block = Some(MechanismConfig::Ccselect(c));
    }
    if let Some(c) = parsed.mecassoc {
        present.push("mecassoc".to_string());
        block = Some(MechanismConfig::Mecassoc(c));
    }
    if let Some(c) = parsed.compcoord {
        present.push("compcoord".to_string());
        block = Some(MechanismConfig::Compcoord(c));
    }
    if present.len() > 1 {
        return Err(ConfigError::MechanismCount(present));
    }
    let tagged = match (parsed.mechanism, expected) {
        (Some(a), Some(b)) if a != b => {
            return Err(ConfigError::WrongMechanism {
                expected: b.to_string(),
                found: a.to_string(),
            })
        }
        (a, b) => a.or(b),
    };
    let mechanism = match (block, tagged) {
        (Some(b), Some(m)) if b.mechanism() != m => {
            return Err(ConfigError::WrongMechanism {
                expected: m.to_string(),
                found: b.mechanism().to_string(),
            })
        }
        (Some(b), _) => b,
        (None, Some(m)) => MechanismConfig::default_for(m),
        (None, None) => return Err(ConfigError::MechanismCount(Vec::new())),
    };

    let config = ScenarioConfig {
        master_seed: parsed.master_seed.unwrap_or(1),
        run_count: parsed.run_count.unwrap_or(1),
        sample_budget: parsed.sample_budget,
        mechanism,
    };
    config.validate()?;
    let mut defaulted = Vec::new();
    collect_defaulted(&config.to_document(), &source, "", &mut defaulted);
    Ok(LoadedConfig { config, defaulted })
}

fn collect_defaulted(resolved: &Value, source: &Value, prefix: &str, out: &mut Vec<String>) {
    let Value::Object(map) = resolved else { return };
    for (k, v) in map {
        let path = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match source.get(k) {
            None => push_leaves(v, path, out),
            Some(src) => collect_defaulted(v, src, &path, out),
        }
    }
}

fn push_leaves(v: &Value, path: String, out: &mut Vec<String>) {
    match v {
        Value::Object(map) if !map.is_empty() => {
            for (k, x) in map {
                push_leaves(x, format!("{path}.{k}"), out);
            }
        }
        _ => out.push(path),
    }
}
