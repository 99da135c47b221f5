//! Two-gNB CoMP cooperation for pairs of low-latency (LLU) and
//! latency-tolerant (LTU) users.
//!
//! Each episode draws two users, one per gNB, each with a class and a
//! traffic direction. UL and DL share the frequency. The cooperative pair
//! picks a scheme from the decision table; the single-connectivity baseline
//! serves each user from its own gNB with co-channel interference from the
//! other. Both are evaluated on the same fading draws.
//!
//! Slotting: a data slot is followed by a one-slot, error-free feedback
//! slot, so every attempt costs two slots (plus the Xn delay for schemes
//! that need the other gNB).

use std::collections::BTreeMap;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::batch;
use crate::config::{check_probability, ConfigError};
use crate::engine::RngStream;
use crate::metrics::EmpiricalDistribution;
use crate::radio::{db_to_linear, decode_outcome, Fading, LinkModel};
use crate::report::{fmt_f64, Table};

const EPISODE_CHUNK: u64 = 8192;

pub type UserId = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum UserClass {
    Llu,
    Ltu,
}

impl UserClass {
    pub fn as_str(self) -> &'static str {
        match self {
            UserClass::Llu => "LLU",
            UserClass::Ltu => "LTU",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Direction {
    Dl,
    Ul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub id: UserId,
    pub class: UserClass,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CooperationDecision {
    DcToUser(UserId),
    JtComp,
    IcComp,
    ScBaseline,
}

impl CooperationDecision {
    pub fn label(self) -> &'static str {
        match self {
            CooperationDecision::DcToUser(_) => "dc",
            CooperationDecision::JtComp => "jt",
            CooperationDecision::IcComp => "ic",
            CooperationDecision::ScBaseline => "sc_baseline",
        }
    }
}

impl fmt::Display for CooperationDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CooperationDecision::DcToUser(u) => write!(f, "dc_to_user({u})"),
            other => f.write_str(other.label()),
        }
    }
}

/// The cooperation table. `pick_first` resolves the LTU/LTU tie and is
/// ignored otherwise.
pub fn decide_cooperation(a: &UserProfile, b: &UserProfile, pick_first: bool) -> CooperationDecision {
    use UserClass::*;
    if a.direction != b.direction {
        return CooperationDecision::IcComp;
    }
    match (a.class, b.class) {
        (Llu, Llu) => CooperationDecision::JtComp,
        (Llu, Ltu) => CooperationDecision::DcToUser(a.id),
        (Ltu, Llu) => CooperationDecision::DcToUser(b.id),
        (Ltu, Ltu) => CooperationDecision::DcToUser(if pick_first { a.id } else { b.id }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoWayExchange {
    pub first_tx_slot: u64,
    /// `None` when the attempt cap was hit without an ACK.
    pub ack_rx_slot: Option<u64>,
    pub attempts: u32,
}

impl TwoWayExchange {
    pub fn two_way_latency(&self) -> Option<u64> {
        self.ack_rx_slot.map(|a| a - self.first_tx_slot + 1)
    }

    /// Latency counted from the start of the episode (slot 0), which
    /// includes any deferral before the first transmission.
    pub fn latency_from_start(&self) -> f64 {
        self.ack_rx_slot.map_or(f64::INFINITY, |a| (a + 1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompcoordConfig {
    pub episodes: u64,
    pub llu_probability: f64,
    pub dl_probability: f64,
    pub link: LinkModel,
    /// Whether the baseline suffers co-channel interference at all.
    pub cross_interference: bool,
    /// Mean interferer power relative to the mean desired power.
    pub interference_ratio_db: f64,
    /// Fraction of the cross-link interference left after cancellation.
    pub ic_residual: f64,
    pub xn_delay_slots: u64,
    pub max_attempts: u32,
}

impl Default for CompcoordConfig {
    fn default() -> Self {
        Self {
            episodes: 1_000_000,
            llu_probability: 0.5,
            dl_probability: 0.5,
            link: LinkModel::default(),
            cross_interference: true,
            interference_ratio_db: 0.0,
            ic_residual: 0.0,
            xn_delay_slots: 0,
            max_attempts: 1000,
        }
    }
}

impl CompcoordConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.episodes == 0 {
            return Err(ConfigError::invalid("compcoord.episodes", "must be at least 1"));
        }
        check_probability("compcoord.llu_probability", self.llu_probability)?;
        check_probability("compcoord.dl_probability", self.dl_probability)?;
        check_probability("compcoord.ic_residual", self.ic_residual)?;
        if !self.link.mean_snr_db.is_finite() || !self.link.target_snr_db.is_finite() {
            return Err(ConfigError::invalid("compcoord.link", "SNR values must be finite"));
        }
        if !self.interference_ratio_db.is_finite() {
            return Err(ConfigError::invalid("compcoord.interference_ratio_db", "must be finite"));
        }
        if self.max_attempts == 0 {
            return Err(ConfigError::invalid("compcoord.max_attempts", "must be at least 1"));
        }
        Ok(())
    }

    fn interference_mean(&self) -> f64 {
        if self.cross_interference {
            self.link.mean_snr() * db_to_linear(self.interference_ratio_db)
        } else {
            0.0
        }
    }

    /// Closed-form per-attempt success of a single link, with or without
    /// the co-channel interferer (Rayleigh desired and interfering powers).
    pub fn single_link_success(&self, interfered: bool) -> f64 {
        let g = self.link.mean_snr();
        let t = self.link.target_snr();
        let gi = if interfered { self.interference_mean() } else { 0.0 };
        match self.link.fading {
            Fading::Rayleigh => (-t / g).exp() / (1.0 + t * gi / g),
            Fading::None => {
                if g / (1.0 + gi) >= t {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Per-attempt channel draws for one user: own link, the other gNB's link
/// and the co-channel interferer. All three are drawn every attempt so that
/// every scheme sees the same realisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttemptDraw {
    pub own: f64,
    pub other: f64,
    pub interference: f64,
}

pub struct LinkDraws<'a> {
    cfg: &'a CompcoordConfig,
    rng: ChaCha8Rng,
    cache: Vec<AttemptDraw>,
}

impl<'a> LinkDraws<'a> {
    pub fn new(cfg: &'a CompcoordConfig, rng: ChaCha8Rng) -> Self {
        Self {
            cfg,
            rng,
            cache: Vec::new(),
        }
    }

    pub fn get(&mut self, k: usize) -> AttemptDraw {
        while self.cache.len() <= k {
            let own = self.cfg.link.draw_snr(&mut self.rng);
            let other = self.cfg.link.draw_snr(&mut self.rng);
            let i_mean = self.cfg.interference_mean();
            let interference = match self.cfg.link.fading {
                Fading::Rayleigh => crate::engine::exponential(&mut self.rng, i_mean),
                Fading::None => i_mean,
            };
            self.cache.push(AttemptDraw { own, other, interference });
        }
        self.cache[k]
    }
}

/// How one user's attempts are decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttemptModel {
    /// Own link only; `interfered` adds the co-channel term.
    Single { interfered: bool },
    /// Either of the two links.
    Dual,
    /// Power sum of the two links.
    Joint,
    /// Own link with the interference scaled by the IC residual.
    Cancelled,
}

pub fn attempt_succeeds(cfg: &CompcoordConfig, model: AttemptModel, d: AttemptDraw) -> bool {
    let t = cfg.link.target_snr();
    let ok = |sinr: f64| decode_outcome(sinr, t).is_success();
    match model {
        AttemptModel::Single { interfered: false } => ok(d.own),
        AttemptModel::Single { interfered: true } => ok(d.own / (1.0 + d.interference)),
        AttemptModel::Dual => ok(d.own) || ok(d.other),
        AttemptModel::Joint => ok(d.own + d.other),
        AttemptModel::Cancelled => ok(d.own / (1.0 + cfg.ic_residual * d.interference)),
    }
}

/// Iterate attempts until ACK. Each attempt spans the data slot, the
/// feedback slot and `extra` slots of backhaul delay.
pub fn simulate_two_way(
    cfg: &CompcoordConfig,
    model: AttemptModel,
    draws: &mut LinkDraws<'_>,
    first_tx_slot: u64,
    extra: u64,
) -> TwoWayExchange {
    let span = 2 + extra;
    for k in 0..cfg.max_attempts {
        if attempt_succeeds(cfg, model, draws.get(k as usize)) {
            let attempts = k + 1;
            return TwoWayExchange {
                first_tx_slot,
                ack_rx_slot: Some(first_tx_slot + u64::from(attempts) * span - 1),
                attempts,
            };
        }
    }
    TwoWayExchange {
        first_tx_slot,
        ack_rx_slot: None,
        attempts: cfg.max_attempts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserResult {
    pub profile: UserProfile,
    pub cooperative: TwoWayExchange,
    pub baseline: TwoWayExchange,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeResult {
    pub decision: CooperationDecision,
    pub users: [UserResult; 2],
}

pub struct EpisodeStreams {
    users: RngStream,
    pick: RngStream,
    fading: RngStream,
    deferred: RngStream,
}

impl EpisodeStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            users: RngStream::new(seed, "compcoord/users"),
            pick: RngStream::new(seed, "compcoord/pick"),
            fading: RngStream::new(seed, "compcoord/fading"),
            deferred: RngStream::new(seed, "compcoord/deferred"),
        }
    }
}

pub fn draw_users(cfg: &CompcoordConfig, streams: &EpisodeStreams, episode: u64) -> [UserProfile; 2] {
    let user = |id: UserId| {
        let c = u64::from(id) * 2;
        UserProfile {
            id,
            class: if streams.users.uniform_at(episode, c) < cfg.llu_probability {
                UserClass::Llu
            } else {
                UserClass::Ltu
            },
            direction: if streams.users.uniform_at(episode, c + 1) < cfg.dl_probability {
                Direction::Dl
            } else {
                Direction::Ul
            },
        }
    };
    [user(0), user(1)]
}

pub fn run_episode(cfg: &CompcoordConfig, streams: &EpisodeStreams, episode: u64) -> EpisodeResult {
    let users = draw_users(cfg, streams, episode);
    let pick_first = streams.pick.uniform_at(episode, 0) < 0.5;
    let decision = decide_cooperation(&users[0], &users[1], pick_first);
    let cross = users[0].direction != users[1].direction;
    let xn = cfg.xn_delay_slots;

    let mut draws: Vec<LinkDraws> = (0..2)
        .map(|u| LinkDraws::new(cfg, streams.fading.fork(episode * 2 + u)))
        .collect();

    // Baseline: the DL receiver of a cross-direction pair is the only
    // interference-free one.
    let baseline: Vec<TwoWayExchange> = (0..2)
        .map(|u| {
            let interfered = !(cross && users[u].direction == Direction::Dl);
            simulate_two_way(cfg, AttemptModel::Single { interfered }, &mut draws[u], 0, 0)
        })
        .collect();

    let cooperative: Vec<TwoWayExchange> = match decision {
        CooperationDecision::JtComp => (0..2)
            .map(|u| simulate_two_way(cfg, AttemptModel::Joint, &mut draws[u], 0, xn))
            .collect(),
        CooperationDecision::IcComp => (0..2)
            .map(|u| match users[u].direction {
                Direction::Ul => simulate_two_way(cfg, AttemptModel::Cancelled, &mut draws[u], 0, xn),
                Direction::Dl => simulate_two_way(cfg, AttemptModel::Single { interfered: false }, &mut draws[u], 0, 0),
            })
            .collect(),
        CooperationDecision::DcToUser(served) => {
            let s = served as usize;
            let served_ex = simulate_two_way(cfg, AttemptModel::Dual, &mut draws[s], 0, xn);
            let o = 1 - s;
            // The deferred user goes after the served one finishes, alone on
            // its own link, on fresh draws.
            let start = served_ex.ack_rx_slot.map_or(u64::MAX / 2, |a| a + 1);
            let mut fresh = LinkDraws::new(cfg, streams.deferred.fork(episode * 2 + o as u64));
            let deferred = simulate_two_way(cfg, AttemptModel::Single { interfered: false }, &mut fresh, start, 0);
            let mut v = vec![served_ex; 2];
            v[o] = deferred;
            v
        }
        CooperationDecision::ScBaseline => baseline.clone(),
    };

    EpisodeResult {
        decision,
        users: [0, 1].map(|u| UserResult {
            profile: users[u],
            cooperative: cooperative[u],
            baseline: baseline[u],
        }),
    }
}

/// Latency distributions keyed by (scheme label, user class). The
/// "cooperative" scheme pools dc, jt and ic.
#[derive(Debug, Clone, Default)]
pub struct CompcoordRun {
    pub latency: BTreeMap<(String, UserClass), EmpiricalDistribution>,
    pub decisions: BTreeMap<String, u64>,
    pub episodes: u64,
}

pub const SCHEMES: [&str; 5] = ["sc_baseline", "cooperative", "dc", "jt", "ic"];

impl CompcoordRun {
    fn record(&mut self, scheme: &str, class: UserClass, x: f64) {
        self.latency.entry((scheme.to_string(), class)).or_default().push(x);
    }

    pub fn add(&mut self, ep: &EpisodeResult) {
        self.episodes += 1;
        *self.decisions.entry(ep.decision.to_string()).or_default() += 1;
        for u in &ep.users {
            let c = u.profile.class;
            self.record("sc_baseline", c, u.baseline.latency_from_start());
            self.record("cooperative", c, u.cooperative.latency_from_start());
            self.record(ep.decision.label(), c, u.cooperative.latency_from_start());
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, d) in &other.latency {
            let merged = match out.latency.get(k) {
                Some(mine) => mine.merge(d),
                None => d.clone(),
            };
            out.latency.insert(k.clone(), merged);
        }
        for (k, n) in &other.decisions {
            *out.decisions.entry(k.clone()).or_default() += n;
        }
        out.episodes += other.episodes;
        out
    }

    pub fn get(&self, scheme: &str, class: UserClass) -> Option<&EmpiricalDistribution> {
        self.latency.get(&(scheme.to_string(), class))
    }

    pub fn mean_latency(&self, scheme: &str, class: UserClass) -> f64 {
        self.get(scheme, class).and_then(|d| d.mean()).unwrap_or(f64::NAN)
    }

    /// Relative reduction of the average LLU two-way latency, cooperative vs
    /// baseline.
    pub fn llu_reduction(&self) -> f64 {
        1.0 - self.mean_latency("cooperative", UserClass::Llu) / self.mean_latency("sc_baseline", UserClass::Llu)
    }
}

pub fn run_comp_experiment(cfg: &CompcoordConfig, seed: u64) -> Result<CompcoordRun, ConfigError> {
    cfg.validate()?;
    let streams = EpisodeStreams::new(seed);
    let parts = batch::map(batch::chunks(cfg.episodes, EPISODE_CHUNK), |range| {
        let mut run = CompcoordRun::default();
        for e in range {
            run.add(&run_episode(cfg, &streams, e));
        }
        run
    });
    Ok(parts.iter().fold(CompcoordRun::default(), |acc, p| acc.merge(p)))
}

pub const CSV_HEADER: [&str; 5] = ["scheme", "user_class", "avg_two_way_latency_slots", "p99_latency", "episodes"];

pub fn results_table(run: &CompcoordRun) -> Table {
    let mut t = Table::new(&CSV_HEADER);
    for scheme in SCHEMES {
        for class in [UserClass::Llu, UserClass::Ltu] {
            let Some(d) = run.get(scheme, class) else { continue };
            t.push(vec![
                scheme.into(),
                class.as_str().into(),
                fmt_f64(d.mean().unwrap_or(f64::NAN)),
                fmt_f64(d.percentile(99.0).unwrap_or(f64::NAN)),
                d.count().to_string(),
            ]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn user(id: UserId, class: UserClass, direction: Direction) -> UserProfile {
        UserProfile { id, class, direction }
    }

    #[test]
    fn decision_table() {
        use Direction::*;
        use UserClass::*;
        let d = |a, b, p| decide_cooperation(&a, &b, p);
        assert_eq!(d(user(0, Llu, Dl), user(1, Ltu, Dl), false), CooperationDecision::DcToUser(0));
        assert_eq!(d(user(0, Ltu, Ul), user(1, Llu, Ul), true), CooperationDecision::DcToUser(1));
        assert_eq!(d(user(0, Llu, Dl), user(1, Llu, Dl), true), CooperationDecision::JtComp);
        assert_eq!(d(user(0, Llu, Dl), user(1, Ltu, Ul), true), CooperationDecision::IcComp);
        assert_eq!(d(user(0, Ltu, Dl), user(1, Ltu, Dl), true), CooperationDecision::DcToUser(0));
        assert_eq!(d(user(0, Ltu, Dl), user(1, Ltu, Dl), false), CooperationDecision::DcToUser(1));
    }

    #[test]
    fn error_free_links_take_two_slots() {
        let cfg = CompcoordConfig {
            episodes: 2000,
            link: LinkModel {
                mean_snr_db: 10.0,
                target_snr_db: 0.0,
                fading: Fading::None,
            },
            cross_interference: false,
            ..CompcoordConfig::default()
        };
        let streams = EpisodeStreams::new(3);
        for e in 0..2000 {
            let ep = run_episode(&cfg, &streams, e);
            for u in &ep.users {
                assert_eq!(u.baseline.two_way_latency(), Some(2));
                assert_eq!(u.cooperative.two_way_latency(), Some(2));
            }
        }
    }

    #[test]
    fn xn_delay_adds_per_attempt() {
        let cfg = CompcoordConfig {
            xn_delay_slots: 3,
            ..CompcoordConfig::default()
        };
        let mut d = LinkDraws::new(&cfg, RngStream::new(1, "t").fork(0));
        let ex = simulate_two_way(&cfg, AttemptModel::Joint, &mut d, 0, 3);
        assert_eq!(ex.two_way_latency(), Some(u64::from(ex.attempts) * 5));
    }

    #[test]
    fn ltu_pair_pick_is_fair() {
        let cfg = CompcoordConfig {
            llu_probability: 0.0,
            dl_probability: 1.0,
            episodes: 10_000,
            ..CompcoordConfig::default()
        };
        let streams = EpisodeStreams::new(77);
        let mut first = 0u32;
        for e in 0..10_000 {
            match run_episode(&cfg, &streams, e).decision {
                CooperationDecision::DcToUser(0) => first += 1,
                CooperationDecision::DcToUser(1) => {}
                other => panic!("{other:?}"),
            }
        }
        assert_abs_diff_eq!(f64::from(first) / 1e4, 0.5, epsilon = 0.01);
    }

    #[test]
    fn dc_first_attempt_matches_closed_form() {
        let cfg = CompcoordConfig::default();
        let p = cfg.link.outage_probability();
        let rng = RngStream::new(5, "dc");
        let n = 200_000;
        let mut two = 0;
        for i in 0..n {
            let mut d = LinkDraws::new(&cfg, rng.fork(i));
            if simulate_two_way(&cfg, AttemptModel::Dual, &mut d, 0, 0).two_way_latency() == Some(2) {
                two += 1;
            }
        }
        let want = 1.0 - p * p;
        let se = (want * (1.0 - want) / n as f64).sqrt();
        assert!((f64::from(two) / n as f64 - want).abs() < 4.0 * se);
    }

    #[test]
    fn ic_beats_no_ic_under_equal_power_interference() {
        let cfg = CompcoordConfig::default();
        let mut d = LinkDraws::new(&cfg, RngStream::new(8, "ic").fork(0));
        let n = 100_000;
        let (mut with, mut without) = (0, 0);
        for k in 0..n {
            let a = d.get(k);
            with += attempt_succeeds(&cfg, AttemptModel::Cancelled, a) as u32;
            without += attempt_succeeds(&cfg, AttemptModel::Single { interfered: true }, a) as u32;
        }
        assert!(with > without);
        let sc = cfg.single_link_success(true);
        assert_abs_diff_eq!(f64::from(without) / n as f64, sc, epsilon = 0.01);
    }

    #[test]
    fn baseline_is_geometric() {
        let cfg = CompcoordConfig {
            dl_probability: 1.0,
            episodes: 100_000,
            ..CompcoordConfig::default()
        };
        let run = run_comp_experiment(&cfg, 11).unwrap();
        let s = cfg.single_link_success(true);
        let dist = run.get("sc_baseline", UserClass::Llu).unwrap().merge(run.get("sc_baseline", UserClass::Ltu).unwrap());
        let n = dist.count() as f64;
        for (x, c) in dist.value_counts() {
            assert_eq!(x as u64 % 2, 0);
            let k = (x as i32) / 2;
            let want = (1.0 - s).powi(k - 1) * s;
            let se = (want * (1.0 - want) / n).sqrt();
            assert!((c as f64 / n - want).abs() <= 3.0 * se + 1e-12 || want * n < 5.0, "latency {x}");
        }
    }

    #[test]
    fn llu_reduction_in_expected_range() {
        let cfg = CompcoordConfig {
            episodes: 50_000,
            ..CompcoordConfig::default()
        };
        let r = run_comp_experiment(&cfg, 1).unwrap().llu_reduction();
        assert!((0.40..=0.55).contains(&r), "{r}");
    }

    #[test]
    fn merge_is_additive() {
        let cfg = CompcoordConfig {
            episodes: 1000,
            ..CompcoordConfig::default()
        };
        let a = run_comp_experiment(&cfg, 1).unwrap();
        let b = run_comp_experiment(&cfg, 2).unwrap();
        let ab = a.merge(&b);
        assert_eq!(ab.episodes, 2000);
        assert_eq!(ab.decisions.values().sum::<u64>(), 2000);
        let ba = b.merge(&a);
        assert_eq!(results_table(&ab), results_table(&ba));
    }

    proptest! {
        #[test]
        fn coupled_ordering(seed in any::<u64>(), ratio in -10.0f64..10.0) {
            let cfg = CompcoordConfig { interference_ratio_db: ratio, ..CompcoordConfig::default() };
            let rng = RngStream::new(seed, "prop");
            let lat = |m| {
                let mut d = LinkDraws::new(&cfg, rng.fork(0));
                simulate_two_way(&cfg, m, &mut d, 0, 0).two_way_latency().unwrap()
            };
            let sc = lat(AttemptModel::Single { interfered: true });
            let sc_free = lat(AttemptModel::Single { interfered: false });
            let dc = lat(AttemptModel::Dual);
            let jt = lat(AttemptModel::Joint);
            let ic = lat(AttemptModel::Cancelled);
            prop_assert!(dc <= sc_free && sc_free <= sc);
            prop_assert!(jt <= dc);
            prop_assert!(ic <= sc);
            for l in [sc, dc, jt, ic] {
                prop_assert!(l >= 2 && l % 2 == 0);
            }
        }
    }
}
