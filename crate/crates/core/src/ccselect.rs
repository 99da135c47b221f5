//! Rule-based component-carrier selection.
//!
//! Each rule maps one measurement (RSRP, RSRQ or CC load) to a score in
//! `[0, 1]` through a two-anchor ramp. A CC's score is the mean of its rule
//! scores; the CCs scoring at least the threshold are assigned best first,
//! up to `max_ccs`. The baseline policy is a single RSRP rule, the proposed
//! one combines an RSRQ rule with a load rule.
//!
//! The evaluation layout is a hexagonal grid of tri-sector sites with
//! co-located CCs per sector and a hotspot disc straddling two sectors of
//! one site. UEs arrive one at a time and loads are updated after every
//! assignment.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{check_positive, check_probability, ConfigError};
use crate::engine::RngStream;
use crate::metrics::{jain_index, EmpiricalDistribution};
use crate::radio::{db_to_linear, dbm_to_mw, linear_to_db, noise_dbm, rsrq, shannon_rate, PathlossModel, RadioError};
use crate::report::{fmt_f64, Table};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CcselectError {
    #[error("measurement has no {0:?} value")]
    MissingMetric(Metric),
    #[error("cannot aggregate an empty score list")]
    NoScores,
    #[error("UE {0} blocked: no measurable CC has capacity left")]
    Blocked(u32),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub site: u16,
    pub sector: u8,
    pub cc: u8,
}

impl std::fmt::Display for CellId {
    /// 1-based `site/sector/cc`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.site + 1, self.sector + 1, self.cc + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarrierCell {
    pub id: CellId,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub admitted: Vec<u32>,
    pub capacity: usize,
}

impl CarrierCell {
    pub fn load(&self) -> usize {
        self.admitted.len()
    }

    pub fn load_fraction(&self) -> f64 {
        self.load() as f64 / self.capacity as f64
    }

    pub fn has_headroom(&self) -> bool {
        self.load() < self.capacity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rsrp,
    Rsrq,
    Load,
}

/// Measured inputs for one CC, as seen by one UE.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UeMeasurement {
    pub rsrp_dbm: Option<f64>,
    pub rsrq_db: Option<f64>,
    pub load_fraction: Option<f64>,
}

impl UeMeasurement {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Rsrp => self.rsrp_dbm,
            Metric::Rsrq => self.rsrq_db,
            Metric::Load => self.load_fraction,
        }
    }
}

/// Piecewise-linear membership: `low_anchor -> low_score`,
/// `high_anchor -> high_score`, linear in between, clamped outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub metric: Metric,
    pub low_anchor: f64,
    pub low_score: f64,
    pub high_anchor: f64,
    pub high_score: f64,
}

impl Rule {
    pub fn rsrp(low_dbm: f64, high_dbm: f64) -> Self {
        Self {
            metric: Metric::Rsrp,
            low_anchor: low_dbm,
            low_score: 0.0,
            high_anchor: high_dbm,
            high_score: 1.0,
        }
    }

    pub fn rsrq(low_db: f64, high_db: f64) -> Self {
        Self {
            metric: Metric::Rsrq,
            low_anchor: low_db,
            low_score: 0.0,
            high_anchor: high_db,
            high_score: 1.0,
        }
    }

    /// Empty CC scores 1, full CC scores 0.
    pub fn load() -> Self {
        Self {
            metric: Metric::Load,
            low_anchor: 0.0,
            low_score: 1.0,
            high_anchor: 1.0,
            high_score: 0.0,
        }
    }

    pub fn score_of(&self, x: f64) -> f64 {
        let s = if x <= self.low_anchor {
            self.low_score
        } else if x >= self.high_anchor {
            self.high_score
        } else {
            let t = (x - self.low_anchor) / (self.high_anchor - self.low_anchor);
            self.low_score + t * (self.high_score - self.low_score)
        };
        s.clamp(0.0, 1.0)
    }

    fn validate(&self, field: &str) -> Result<(), ConfigError> {
        if !(self.high_anchor > self.low_anchor) {
            return Err(ConfigError::invalid(field, "high_anchor must exceed low_anchor"));
        }
        check_probability(&format!("{field}.low_score"), self.low_score)?;
        check_probability(&format!("{field}.high_score"), self.high_score)?;
        Ok(())
    }
}

pub fn evaluate_rule(rule: &Rule, m: &UeMeasurement) -> Result<f64, CcselectError> {
    m.get(rule.metric)
        .map(|x| rule.score_of(x))
        .ok_or(CcselectError::MissingMetric(rule.metric))
}

pub fn aggregate_scores(scores: &[f64]) -> Result<f64, CcselectError> {
    if scores.is_empty() {
        return Err(CcselectError::NoScores);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Policy {
    pub rules: Vec<Rule>,
    pub threshold: f64,
    pub max_ccs: usize,
}

impl Default for Policy {
    fn default() -> Self {
        Self {
            rules: vec![Rule::rsrq(-10.0, 0.0), Rule::load()],
            threshold: 0.5,
            max_ccs: 5,
        }
    }
}

impl Policy {
    pub fn score(&self, m: &UeMeasurement) -> Result<f64, CcselectError> {
        let scores = self
            .rules
            .iter()
            .map(|r| evaluate_rule(r, m))
            .collect::<Result<Vec<_>, _>>()?;
        aggregate_scores(&scores)
    }

    fn validate(&self, field: &str) -> Result<(), ConfigError> {
        if self.rules.is_empty() {
            return Err(ConfigError::invalid(format!("{field}.rules"), "at least one rule required"));
        }
        for (i, r) in self.rules.iter().enumerate() {
            r.validate(&format!("{field}.rules[{i}]"))?;
        }
        check_probability(&format!("{field}.threshold"), self.threshold)?;
        if self.max_ccs == 0 {
            return Err(ConfigError::invalid(format!("{field}.max_ccs"), "must be at least 1"));
        }
        Ok(())
    }
}

/// A scored candidate CC, carrying the tie-break keys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub index: usize,
    pub score: f64,
    pub load: usize,
    pub cc: u8,
    pub sector: u8,
    pub site: u16,
}

fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.load.cmp(&b.load))
        .then(a.cc.cmp(&b.cc))
        .then(a.sector.cmp(&b.sector))
        .then(a.site.cmp(&b.site))
}

/// Indices of the chosen candidates, best first: those with score `>=
/// threshold` (at most `max_ccs`), or the single best when none qualifies.
pub fn choose(candidates: &[Candidate], threshold: f64, max_ccs: usize) -> Vec<usize> {
    let mut sorted: Vec<&Candidate> = candidates.iter().collect();
    sorted.sort_by(|a, b| rank(a, b));
    let picked: Vec<usize> = sorted
        .iter()
        .filter(|c| c.score >= threshold)
        .take(max_ccs)
        .map(|c| c.index)
        .collect();
    if picked.is_empty() {
        sorted.first().map(|c| vec![c.index]).unwrap_or_default()
    } else {
        picked
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    PCell,
    PSCell,
    SCell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub ue: u32,
    pub ccs: Vec<(usize, Role)>,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.ccs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ccs.is_empty()
    }
}

fn assign_roles(cells: &[CarrierCell], chosen: &[usize]) -> Vec<(usize, Role)> {
    let Some(&first) = chosen.first() else {
        return Vec::new();
    };
    let master = cells[first].id.site;
    let mut have_ps = false;
    chosen
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let role = if i == 0 {
                Role::PCell
            } else if !have_ps && cells[c].id.site != master {
                have_ps = true;
                Role::PSCell
            } else {
                Role::SCell
            };
            (c, role)
        })
        .collect()
}

/// Score every measurable CC with headroom, choose, and admit the UE.
/// `measurements[i]` belongs to `cells[i]`; `None` marks a CC the UE cannot
/// measure.
pub fn select_ccs(
    ue: u32,
    measurements: &[Option<UeMeasurement>],
    cells: &mut [CarrierCell],
    policy: &Policy,
) -> Result<Assignment, CcselectError> {
    let mut candidates = Vec::new();
    for (i, (m, cell)) in measurements.iter().zip(cells.iter()).enumerate() {
        let Some(m) = m else { continue };
        if !cell.has_headroom() {
            continue;
        }
        candidates.push(Candidate {
            index: i,
            score: policy.score(m)?,
            load: cell.load(),
            cc: cell.id.cc,
            sector: cell.id.sector,
            site: cell.id.site,
        });
    }
    if candidates.is_empty() {
        return Err(CcselectError::Blocked(ue));
    }
    let chosen = choose(&candidates, policy.threshold, policy.max_ccs);
    for &c in &chosen {
        cells[c].admitted.push(ue);
    }
    Ok(Assignment {
        ue,
        ccs: assign_roles(cells, &chosen),
    })
}

/// Equal time share of each assigned CC's Shannon rate.
pub fn compute_ue_throughput(
    assignment: &Assignment,
    cells: &[CarrierCell],
    sinr_of: impl Fn(usize) -> f64,
) -> Result<f64, CcselectError> {
    let mut total = 0.0;
    for &(c, _) in &assignment.ccs {
        let cell = &cells[c];
        let rate = shannon_rate(sinr_of(c), cell.bandwidth_hz)?;
        total += rate / cell.load().max(1) as f64;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Layout {
    pub rows: u16,
    pub cols: u16,
    pub isd_m: f64,
    pub ccs_per_sector: u8,
    pub bandwidth_hz: f64,
    /// Resource blocks per CC; RSRP is the per-resource-element power.
    pub resource_blocks: u16,
    /// Extra pathloss of CC `k` over CC 0 is `k` times this step, standing in
    /// for carriers spread over different bands.
    pub cc_pathloss_step_db: f64,
    pub carrier_tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub beamwidth_deg: f64,
    pub front_to_back_db: f64,
    pub noise_figure_db: f64,
    pub min_distance_m: f64,
    pub pathloss: PathlossModel,
}

impl Default for Layout {
    fn default() -> Self {
        Self {
            rows: 3,
            cols: 4,
            isd_m: 500.0,
            ccs_per_sector: 5,
            bandwidth_hz: 1.4e6,
            resource_blocks: 6,
            cc_pathloss_step_db: 1.5,
            carrier_tx_power_dbm: 40.0,
            antenna_gain_dbi: 14.0,
            beamwidth_deg: 65.0,
            front_to_back_db: 20.0,
            noise_figure_db: 9.0,
            min_distance_m: 10.0,
            pathloss: PathlossModel::macro_urban(),
        }
    }
}

pub const SECTORS: u8 = 3;

impl Layout {
    pub fn sites(&self) -> Vec<(f64, f64)> {
        let dy = self.isd_m * 3f64.sqrt() / 2.0;
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let shift = if r % 2 == 1 { self.isd_m / 2.0 } else { 0.0 };
                out.push((c as f64 * self.isd_m + shift, r as f64 * dy));
            }
        }
        out
    }

    /// Boresight of `sector` in degrees (30, 150, 270).
    pub fn boresight_deg(sector: u8) -> f64 {
        30.0 + 120.0 * sector as f64
    }

    /// Horizontal antenna gain toward azimuth `az_deg`.
    pub fn antenna_gain_db(&self, sector: u8, az_deg: f64) -> f64 {
        let mut off = (az_deg - Self::boresight_deg(sector)).rem_euclid(360.0);
        if off > 180.0 {
            off -= 360.0;
        }
        self.antenna_gain_dbi - (12.0 * (off / self.beamwidth_deg).powi(2)).min(self.front_to_back_db)
    }

    pub fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let sites = self.sites();
        let m = self.isd_m / 2.0;
        let xs = sites.iter().map(|s| s.0);
        let ys = sites.iter().map(|s| s.1);
        let (x0, x1) = xs.fold((f64::MAX, f64::MIN), |(a, b), x| (a.min(x), b.max(x)));
        let (y0, y1) = ys.fold((f64::MAX, f64::MIN), |(a, b), y| (a.min(y), b.max(y)));
        ((x0 - m, x1 + m), (y0 - m, y1 + m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hotspot {
    pub fraction: f64,
    /// 0-based index of the site whose sectors host the hotspot.
    pub site: u16,
    /// The hotspot straddles this sector and the next one.
    pub first_sector: u8,
    pub offset_m: f64,
    pub radius_m: f64,
}

impl Default for Hotspot {
    fn default() -> Self {
        Self {
            fraction: 0.5,
            site: 5,
            first_sector: 0,
            offset_m: 80.0,
            radius_m: 200.0,
        }
    }
}

impl Hotspot {
    pub fn center(&self, layout: &Layout) -> (f64, f64) {
        let (sx, sy) = layout.sites()[self.site as usize];
        let az = (Layout::boresight_deg(self.first_sector) + 60.0).to_radians();
        (sx + self.offset_m * az.cos(), sy + self.offset_m * az.sin())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CcselectConfig {
    pub layout: Layout,
    pub hotspot: Hotspot,
    pub ues: u32,
    pub capacity: usize,
    /// Sectors below this RSRP are not measurable.
    pub min_rsrp_dbm: f64,
    /// Weight of data-RE activity against the always-on reference signals
    /// in the RSRQ denominator.
    pub rsrq_activity_weight: f64,
    pub baseline: Policy,
    pub proposed: Policy,
    /// Assign with duplication semantics (URLLC variant): the CC list is the
    /// duplication set and throughput is that of the best CC only.
    pub duplication_mode: bool,
}

impl Default for CcselectConfig {
    fn default() -> Self {
        Self {
            layout: Layout::default(),
            hotspot: Hotspot::default(),
            ues: 400,
            capacity: 10,
            min_rsrp_dbm: -100.0,
            rsrq_activity_weight: 2.0,
            baseline: Policy {
                rules: vec![Rule::rsrp(-110.0, -75.0)],
                threshold: 0.5,
                max_ccs: 5,
            },
            proposed: Policy::default(),
            duplication_mode: false,
        }
    }
}

impl CcselectConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let l = &self.layout;
        if l.rows == 0 || l.cols == 0 {
            return Err(ConfigError::invalid("ccselect.layout", "need at least one site"));
        }
        check_positive("ccselect.layout.isd_m", l.isd_m)?;
        check_positive("ccselect.layout.bandwidth_hz", l.bandwidth_hz)?;
        check_positive("ccselect.layout.beamwidth_deg", l.beamwidth_deg)?;
        check_positive("ccselect.layout.min_distance_m", l.min_distance_m)?;
        if !(l.cc_pathloss_step_db >= 0.0 && l.cc_pathloss_step_db.is_finite()) {
            return Err(ConfigError::invalid("ccselect.layout.cc_pathloss_step_db", "must be finite and non-negative"));
        }
        if l.resource_blocks == 0 {
            return Err(ConfigError::invalid("ccselect.layout.resource_blocks", "must be at least 1"));
        }
        if l.ccs_per_sector == 0 {
            return Err(ConfigError::invalid("ccselect.layout.ccs_per_sector", "must be at least 1"));
        }
        check_probability("ccselect.hotspot.fraction", self.hotspot.fraction)?;
        if self.hotspot.site as usize >= (l.rows as usize * l.cols as usize) {
            return Err(ConfigError::invalid("ccselect.hotspot.site", "no such site"));
        }
        if self.hotspot.first_sector >= SECTORS {
            return Err(ConfigError::invalid("ccselect.hotspot.first_sector", "must be 0, 1 or 2"));
        }
        check_positive("ccselect.hotspot.radius_m", self.hotspot.radius_m)?;
        if self.ues == 0 {
            return Err(ConfigError::invalid("ccselect.ues", "must be at least 1"));
        }
        if self.capacity == 0 {
            return Err(ConfigError::invalid("ccselect.capacity", "must be at least 1"));
        }
        if !(self.rsrq_activity_weight >= 0.0) {
            return Err(ConfigError::invalid("ccselect.rsrq_activity_weight", "must be non-negative"));
        }
        self.baseline.validate("ccselect.baseline")?;
        self.proposed.validate("ccselect.proposed")?;
        Ok(())
    }
}

/// Static radio picture: per-(UE, sector) RSRP and full-buffer SINR.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cells: Vec<CarrierCell>,
    pub ue_positions: Vec<(f64, f64)>,
    n_sectors: usize,
    ccs: usize,
    /// Row-major `[ue][sector]`, mW, for CC 0.
    rsrp_mw: Vec<f64>,
    /// Linear gain of each CC index relative to CC 0.
    cc_gain: Vec<f64>,
    noise_mw: f64,
}

impl Scenario {
    pub fn build(cfg: &CcselectConfig, seed: u64) -> Result<Self, CcselectError> {
        let layout = &cfg.layout;
        let sites = layout.sites();
        let n_sectors = sites.len() * SECTORS as usize;
        let ccs = layout.ccs_per_sector as usize;
        let mut cells = Vec::with_capacity(n_sectors * ccs);
        for site in 0..sites.len() as u16 {
            for sector in 0..SECTORS {
                for cc in 0..layout.ccs_per_sector {
                    cells.push(CarrierCell {
                        id: CellId { site, sector, cc },
                        bandwidth_hz: layout.bandwidth_hz,
                        tx_power_dbm: layout.carrier_tx_power_dbm,
                        admitted: Vec::new(),
                        capacity: cfg.capacity,
                    });
                }
            }
        }
        let ue_positions = place_ues(cfg, seed);
        let mut rsrp_mw = Vec::with_capacity(ue_positions.len() * n_sectors);
        for &(x, y) in &ue_positions {
            for (si, &(sx, sy)) in sites.iter().enumerate() {
                let (dx, dy) = (x - sx, y - sy);
                let d = dx.hypot(dy).max(layout.min_distance_m);
                let az = dy.atan2(dx).to_degrees();
                let pl = layout.pathloss.pathloss_db(d)?;
                for sector in 0..SECTORS {
                    let _ = si;
                    let g = layout.antenna_gain_db(sector, az);
                    rsrp_mw.push(dbm_to_mw(layout.carrier_tx_power_dbm + g - pl));
                }
            }
        }
        Ok(Self {
            cells,
            ue_positions,
            n_sectors,
            ccs,
            rsrp_mw,
            cc_gain: (0..ccs)
                .map(|k| db_to_linear(-(k as f64) * layout.cc_pathloss_step_db))
                .collect(),
            noise_mw: dbm_to_mw(noise_dbm(layout.bandwidth_hz, layout.noise_figure_db)),
        })
    }

    fn sector_of(&self, cell: usize) -> usize {
        cell / self.ccs
    }

    fn rsrp_row(&self, ue: usize) -> &[f64] {
        &self.rsrp_mw[ue * self.n_sectors..(ue + 1) * self.n_sectors]
    }

    /// Full-buffer SINR of `ue` on `cell`.
    pub fn sinr(&self, ue: usize, cell: usize) -> f64 {
        let row = self.rsrp_row(ue);
        let sector = self.sector_of(cell);
        let g = self.cc_gain[cell % self.ccs];
        let total: f64 = row.iter().sum();
        g * row[sector] / (g * (total - row[sector]) + self.noise_mw)
    }

    /// Current measurements of `ue` on every cell (given the present loads).
    pub fn measure(&self, cfg: &CcselectConfig, ue: usize) -> Vec<Option<UeMeasurement>> {
        let row = self.rsrp_row(ue);
        let re_offset_db = linear_to_db(12.0 * f64::from(cfg.layout.resource_blocks));
        let mut rssi = vec![self.noise_mw; self.ccs];
        for (ci, cell) in self.cells.iter().enumerate() {
            let activity = cell.load_fraction();
            let k = ci % self.ccs;
            rssi[k] += self.cc_gain[k] * row[self.sector_of(ci)] * (1.0 + cfg.rsrq_activity_weight * activity);
        }
        self.cells
            .iter()
            .enumerate()
            .map(|(ci, cell)| {
                let p = self.cc_gain[ci % self.ccs] * row[self.sector_of(ci)];
                let rsrp_dbm = linear_to_db(p) - re_offset_db;
                if rsrp_dbm < cfg.min_rsrp_dbm {
                    return None;
                }
                Some(UeMeasurement {
                    rsrp_dbm: Some(rsrp_dbm),
                    rsrq_db: rsrq(p, rssi[ci % self.ccs]).ok(),
                    load_fraction: Some(cell.load_fraction()),
                })
            })
            .collect()
    }

    /// Best-RSRP sector is always measurable, so a UE is only blocked by capacity.
    fn ensure_serving(&self, ue: usize, m: &mut [Option<UeMeasurement>], cfg: &CcselectConfig) {
        if m.iter().any(Option::is_some) {
            return;
        }
        let row = self.rsrp_row(ue);
        let best = (0..self.n_sectors)
            .max_by(|&a, &b| row[a].total_cmp(&row[b]))
            .expect("at least one sector");
        let mut full = self.measure(
            &CcselectConfig {
                min_rsrp_dbm: f64::NEG_INFINITY,
                ..cfg.clone()
            },
            ue,
        );
        for (ci, slot) in m.iter_mut().enumerate() {
            if self.sector_of(ci) == best {
                *slot = full[ci].take();
            }
        }
    }

    pub fn cc_loads(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.load() as f64).collect()
    }
}

fn place_ues(cfg: &CcselectConfig, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = RngStream::new(seed, "ccselect/ues");
    let ((x0, x1), (y0, y1)) = cfg.layout.bounds();
    let (hx, hy) = cfg.hotspot.center(&cfg.layout);
    let n_hot = (cfg.ues as f64 * cfg.hotspot.fraction).round() as u32;
    let mut out = Vec::with_capacity(cfg.ues as usize);
    for i in 0..cfg.ues {
        let p = if i < n_hot {
            let r = cfg.hotspot.radius_m * rng.uniform().sqrt();
            let a = 2.0 * PI * rng.uniform();
            (hx + r * a.cos(), hy + r * a.sin())
        } else {
            (x0 + (x1 - x0) * rng.uniform(), y0 + (y1 - y0) * rng.uniform())
        };
        out.push(p);
    }
    // Interleave hotspot and background arrivals.
    let mut order: Vec<(u64, (f64, f64))> = out.into_iter().map(|p| (rng.next_u64(), p)).collect();
    order.sort_by_key(|(k, _)| *k);
    order.into_iter().map(|(_, p)| p).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Baseline,
    Proposed,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Baseline => "baseline",
            PolicyKind::Proposed => "proposed",
        }
    }
}

/// Outcome of one policy on one UE drop.
#[derive(Debug, Clone)]
pub struct PolicyOutcome {
    pub policy: PolicyKind,
    /// Per served UE: (number of CCs, throughput bit/s).
    pub ue_throughput: Vec<(usize, f64)>,
    pub blocked: u32,
    pub cc_loads: Vec<f64>,
    pub assignments: Vec<Assignment>,
}

impl PolicyOutcome {
    pub fn jain(&self) -> f64 {
        jain_index(&self.cc_loads)
    }
}

pub fn run_policy(cfg: &CcselectConfig, scenario: &Scenario, kind: PolicyKind) -> Result<PolicyOutcome, CcselectError> {
    let policy = match kind {
        PolicyKind::Baseline => &cfg.baseline,
        PolicyKind::Proposed => &cfg.proposed,
    };
    let mut sc = scenario.clone();
    let mut assignments = Vec::new();
    let mut blocked = 0;
    for ue in 0..sc.ue_positions.len() {
        let mut m = sc.measure(cfg, ue);
        sc.ensure_serving(ue, &mut m, cfg);
        let mut cells = std::mem::take(&mut sc.cells);
        let r = select_ccs(ue as u32, &m, &mut cells, policy);
        sc.cells = cells;
        match r {
            Ok(a) => assignments.push(a),
            Err(CcselectError::Blocked(_)) => blocked += 1,
            Err(e) => return Err(e),
        }
    }
    let mut ue_throughput = Vec::with_capacity(assignments.len());
    for a in &assignments {
        let ue = a.ue as usize;
        let sinr_of = |c: usize| sc.sinr(ue, c);
        let t = if cfg.duplication_mode {
            // Duplicated flow: the useful rate is that of the best copy.
            a.ccs
                .iter()
                .map(|&(c, _)| shannon_rate(sinr_of(c), sc.cells[c].bandwidth_hz).map(|r| r / sc.cells[c].load().max(1) as f64))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .fold(0.0, f64::max)
        } else {
            compute_ue_throughput(a, &sc.cells, sinr_of)?
        };
        ue_throughput.push((a.len(), t));
    }
    Ok(PolicyOutcome {
        policy: kind,
        ue_throughput,
        blocked,
        cc_loads: sc.cc_loads(),
        assignments,
    })
}

/// Mergeable per-policy accumulators.
#[derive(Debug, Clone)]
pub struct PolicyAccumulator {
    pub policy: PolicyKind,
    pub all: EmpiricalDistribution,
    /// Index `n - 1` holds UEs with `n` assigned CCs.
    pub by_ccs: Vec<EmpiricalDistribution>,
    pub ues: u64,
    pub blocked: u64,
    pub jain: Vec<f64>,
}

impl PolicyAccumulator {
    fn from_outcome(o: &PolicyOutcome, max_ccs: usize) -> Self {
        let mut by_ccs = vec![EmpiricalDistribution::new(); max_ccs];
        let mut all = EmpiricalDistribution::new();
        for &(n, t) in &o.ue_throughput {
            all.push(t);
            by_ccs[n - 1].push(t);
        }
        Self {
            policy: o.policy,
            all,
            by_ccs,
            ues: o.ue_throughput.len() as u64 + o.blocked as u64,
            blocked: o.blocked as u64,
            jain: vec![o.jain()],
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        let mut jain = self.jain.clone();
        jain.extend_from_slice(&other.jain);
        let n = self.by_ccs.len().max(other.by_ccs.len());
        let empty = EmpiricalDistribution::new();
        Self {
            policy: self.policy,
            all: self.all.merge(&other.all),
            by_ccs: (0..n)
                .map(|i| {
                    self.by_ccs.get(i).unwrap_or(&empty).merge(other.by_ccs.get(i).unwrap_or(&empty))
                })
                .collect(),
            ues: self.ues + other.ues,
            blocked: self.blocked + other.blocked,
            jain,
        }
    }

    pub fn blocked_fraction(&self) -> f64 {
        self.blocked as f64 / self.ues as f64
    }

    pub fn mean_jain(&self) -> f64 {
        self.jain.iter().sum::<f64>() / self.jain.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct CcselectRun {
    pub baseline: PolicyAccumulator,
    pub proposed: PolicyAccumulator,
}

impl CcselectRun {
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            baseline: self.baseline.merge(&other.baseline),
            proposed: self.proposed.merge(&other.proposed),
        }
    }

    /// Relative gain of proposed over baseline at percentile `q` over all UEs.
    pub fn gain_at(&self, q: f64) -> f64 {
        let b = self.baseline.all.percentile(q).unwrap_or(f64::NAN);
        let p = self.proposed.all.percentile(q).unwrap_or(f64::NAN);
        p / b - 1.0
    }
}

/// Both policies on the same UE drop.
pub fn run_carrier_experiment(cfg: &CcselectConfig, seed: u64) -> Result<CcselectRun, CcselectError> {
    cfg.validate()?;
    let scenario = Scenario::build(cfg, seed)?;
    let b = run_policy(cfg, &scenario, PolicyKind::Baseline)?;
    let p = run_policy(cfg, &scenario, PolicyKind::Proposed)?;
    Ok(CcselectRun {
        baseline: PolicyAccumulator::from_outcome(&b, cfg.baseline.max_ccs),
        proposed: PolicyAccumulator::from_outcome(&p, cfg.proposed.max_ccs),
    })
}

pub const CSV_HEADER: [&str; 7] = ["policy", "n_ccs", "p5", "p50", "p95", "blocked_fraction", "jain_index"];

pub fn results_table(run: &CcselectRun) -> Table {
    let mut t = Table::new(&CSV_HEADER);
    for acc in [&run.baseline, &run.proposed] {
        let row = |label: String, d: &EmpiricalDistribution| {
            let q = |x| d.percentile(x).map(fmt_f64).unwrap_or_else(|_| "nan".into());
            vec![
                acc.policy.as_str().into(),
                label,
                q(5.0),
                q(50.0),
                q(95.0),
                fmt_f64(acc.blocked_fraction()),
                fmt_f64(acc.mean_jain()),
            ]
        };
        t.push(row("all".into(), &acc.all));
        for (i, d) in acc.by_ccs.iter().enumerate() {
            t.push(row((i + 1).to_string(), d));
        }
    }
    t
}
