//! Mergeable statistical accumulators.
//!
//! [`EmpiricalDistribution`] keeps exact samples up to a cap and then folds
//! into a fixed-count histogram whose range grows with the data. Every query
//! depends only on the sample multiset, so merging is order-independent.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_EXACT_CAP: usize = 10_000_000;
pub const HISTOGRAM_BINS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("distribution is empty")]
    Empty,
    #[error("percentile {0} is outside [0, 100]")]
    BadPercentile(f64),
    #[error("probability {0} is outside (0, 1]")]
    BadProbability(f64),
}

#[derive(Debug, Clone)]
struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
}

impl Histogram {
    fn new(lo: f64, hi: f64) -> Self {
        let hi = if hi > lo { hi } else { lo + 1e-9 * lo.abs().max(1.0) };
        Self {
            lo,
            hi,
            counts: vec![0; HISTOGRAM_BINS],
        }
    }

    fn width(&self) -> f64 {
        (self.hi - self.lo) / HISTOGRAM_BINS as f64
    }

    fn bin_of(&self, x: f64) -> usize {
        let idx = ((x - self.lo) / self.width()).floor();
        if idx <= 0.0 {
            0
        } else {
            (idx as usize).min(HISTOGRAM_BINS - 1)
        }
    }

    fn center(&self, bin: usize) -> f64 {
        self.lo + (bin as f64 + 0.5) * self.width()
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn add(&mut self, x: f64, n: u64) {
        let b = self.bin_of(x);
        self.counts[b] += n;
    }

    /// Widen the range to cover `x`, at least doubling the span so that
    /// repeated growth stays amortised.
    fn grow_to(&mut self, x: f64) {
        let span = self.hi - self.lo;
        let (mut lo, mut hi) = (self.lo.min(x), self.hi.max(x));
        if hi - lo < 2.0 * span {
            if x < self.lo {
                lo = hi - 2.0 * span;
            } else {
                hi = lo + 2.0 * span;
            }
        }
        let mut grown = Histogram::new(lo, hi);
        grown.absorb(self);
        *self = grown;
    }

    fn absorb(&mut self, other: &Histogram) {
        for (b, &c) in other.counts.iter().enumerate() {
            if c > 0 {
                self.add(other.center(b), c);
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Store {
    Exact(Vec<f64>),
    Binned(Histogram),
}

/// Streaming sample accumulator answering percentile, CCDF and outage queries.
///
/// Samples must not be NaN. `+inf` is accepted (e.g. a dropped packet's
/// latency) and ranks above every finite sample.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    cap: usize,
    store: Store,
    finite: u64,
    pos_inf: u64,
    sum: f64,
    min: f64,
    max: f64,
    sorted: OnceLock<Vec<f64>>,
}

impl Default for EmpiricalDistribution {
    fn default() -> Self {
        Self::with_cap(DEFAULT_EXACT_CAP)
    }
}

/// Outage-latency estimate plus whether the sample count supports it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub value: f64,
    pub reliable: bool,
}

impl EmpiricalDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_cap(cap: usize) -> Self {
        Self {
            cap,
            store: Store::Exact(Vec::new()),
            finite: 0,
            pos_inf: 0,
            sum: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            sorted: OnceLock::new(),
        }
    }

    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Self {
        let mut d = Self::default();
        d.extend(samples);
        d
    }

    pub fn count(&self) -> u64 {
        self.finite + self.pos_inf
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.store, Store::Exact(_))
    }

    /// Histogram bin width, or 0 in exact mode.
    pub fn resolution(&self) -> f64 {
        match &self.store {
            Store::Exact(_) => 0.0,
            Store::Binned(h) => h.width(),
        }
    }

    pub fn min(&self) -> Option<f64> {
        (!self.is_empty()).then_some(if self.finite > 0 { self.min } else { f64::INFINITY })
    }

    pub fn max(&self) -> Option<f64> {
        if self.pos_inf > 0 {
            Some(f64::INFINITY)
        } else {
            (self.finite > 0).then_some(self.max)
        }
    }

    pub fn mean(&self) -> Option<f64> {
        if self.pos_inf > 0 {
            return Some(f64::INFINITY);
        }
        (self.finite > 0).then(|| self.sum / self.finite as f64)
    }

    pub fn push(&mut self, x: f64) {
        debug_assert!(!x.is_nan(), "NaN sample");
        if x == f64::INFINITY {
            self.pos_inf += 1;
            return;
        }
        self.sorted = OnceLock::new();
        self.finite += 1;
        self.sum += x;
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        match &mut self.store {
            Store::Exact(v) => {
                v.push(x);
                if v.len() > self.cap {
                    self.switch_to_histogram();
                }
            }
            Store::Binned(h) => {
                if !h.contains(x) {
                    h.grow_to(x);
                }
                h.add(x, 1);
            }
        }
    }

    fn switch_to_histogram(&mut self) {
        if let Store::Exact(v) = &self.store {
            let mut h = Histogram::new(self.min, self.max);
            for &x in v {
                h.add(x, 1);
            }
            self.store = Store::Binned(h);
            self.sorted = OnceLock::new();
        }
    }

    /// Combine two accumulators. The result depends only on the union of
    /// the sample multisets, not on argument order.
    pub fn merge(&self, other: &Self) -> Self {
        let cap = self.cap.min(other.cap);
        let mut out = Self::with_cap(cap);
        out.finite = self.finite + other.finite;
        out.pos_inf = self.pos_inf + other.pos_inf;
        out.sum = self.sum + other.sum;
        out.min = self.min.min(other.min);
        out.max = self.max.max(other.max);
        let fits = (out.finite as usize) <= cap;
        out.store = match (&self.store, &other.store) {
            (Store::Exact(a), Store::Exact(b)) if fits => {
                let mut v = Vec::with_capacity(a.len() + b.len());
                v.extend_from_slice(a);
                v.extend_from_slice(b);
                // Canonical order keeps the merged store identical either way round.
                v.sort_by(f64::total_cmp);
                Store::Exact(v)
            }
            _ => {
                let (lo, hi) = [&self.store, &other.store].iter().fold(
                    (out.min, out.max),
                    |(lo, hi), s| match s {
                        Store::Binned(h) => (lo.min(h.lo), hi.max(h.hi)),
                        Store::Exact(_) => (lo, hi),
                    },
                );
                let mut h = Histogram::new(lo, hi);
                for s in [&self.store, &other.store] {
                    match s {
                        Store::Exact(v) => v.iter().for_each(|&x| h.add(x, 1)),
                        Store::Binned(o) => h.absorb(o),
                    }
                }
                Store::Binned(h)
            }
        };
        out
    }

    fn sorted(&self) -> &[f64] {
        match &self.store {
            Store::Exact(v) => self.sorted.get_or_init(|| {
                let mut s = v.clone();
                s.sort_by(f64::total_cmp);
                s
            }),
            Store::Binned(_) => &[],
        }
    }

    /// Value at 0-based fractional rank `h` among all samples.
    fn value_at_rank(&self, h: f64) -> f64 {
        let lo_rank = h.floor() as u64;
        let hi_rank = h.ceil() as u64;
        let a = self.order_statistic(lo_rank);
        if hi_rank == lo_rank {
            return a;
        }
        let b = self.order_statistic(hi_rank);
        if a.is_infinite() || b.is_infinite() {
            return if h - lo_rank as f64 > 0.0 { b } else { a };
        }
        a + (h - lo_rank as f64) * (b - a)
    }

    fn order_statistic(&self, rank: u64) -> f64 {
        if rank >= self.finite {
            return f64::INFINITY;
        }
        match &self.store {
            Store::Exact(_) => self.sorted()[rank as usize],
            Store::Binned(h) => {
                let mut before = 0u64;
                for (b, &c) in h.counts.iter().enumerate() {
                    if c > 0 && rank < before + c {
                        let frac = (rank - before) as f64 + 0.5;
                        let x = h.lo + (b as f64 + frac / c as f64) * h.width();
                        return x.clamp(self.min, self.max);
                    }
                    before += c;
                }
                self.max
            }
        }
    }

    /// Inclusive linear-interpolation percentile (rank `(n-1)·q/100`).
    pub fn percentile(&self, q: f64) -> Result<f64, MetricsError> {
        if !(0.0..=100.0).contains(&q) {
            return Err(MetricsError::BadPercentile(q));
        }
        if self.is_empty() {
            return Err(MetricsError::Empty);
        }
        let h = (self.count() - 1) as f64 * q / 100.0;
        Ok(self.value_at_rank(h))
    }

    /// Empirical `P(X > x)`.
    pub fn ccdf_at(&self, x: f64) -> Result<f64, MetricsError> {
        if self.is_empty() {
            return Err(MetricsError::Empty);
        }
        let above = match &self.store {
            Store::Exact(_) => {
                let s = self.sorted();
                (s.len() - s.partition_point(|&v| v <= x)) as f64
            }
            Store::Binned(h) => {
                if x < self.min {
                    self.finite as f64
                } else if x >= self.max {
                    0.0
                } else {
                    let b = h.bin_of(x);
                    let tail: u64 = h.counts[b + 1..].iter().sum();
                    let left = h.lo + b as f64 * h.width();
                    let frac = ((left + h.width() - x) / h.width()).clamp(0.0, 1.0);
                    tail as f64 + frac * h.counts[b] as f64
                }
            }
        };
        let p = (above + self.pos_inf as f64) / self.count() as f64;
        Ok(p.clamp(0.0, 1.0))
    }

    /// Smallest sample `v` with empirical `P(X > v) <= target_prob`.
    ///
    /// Flagged unreliable when fewer than `10 / target_prob` samples back it.
    pub fn outage_latency(&self, target_prob: f64) -> Result<OutageEstimate, MetricsError> {
        if !(target_prob > 0.0 && target_prob <= 1.0) {
            return Err(MetricsError::BadProbability(target_prob));
        }
        if self.is_empty() {
            return Err(MetricsError::Empty);
        }
        let n = self.count();
        // Allowed number of exceedances; the small relative slack absorbs
        // products like 1e-5 * 1e6 landing just under an integer.
        let allowed = ((target_prob * n as f64) * (1.0 + 1e-12)).floor() as u64;
        let rank = n.saturating_sub(1).saturating_sub(allowed);
        let value = match &self.store {
            Store::Exact(_) => self.order_statistic(rank),
            Store::Binned(h) => {
                // Report the bin's upper edge, the conservative side.
                let v = self.order_statistic(rank);
                if v.is_finite() {
                    let b = h.bin_of(v);
                    (h.lo + (b + 1) as f64 * h.width()).min(self.max)
                } else {
                    v
                }
            }
        };
        let reliable = n as f64 * target_prob >= 10.0 * (1.0 - 1e-12);
        Ok(OutageEstimate { value, reliable })
    }

    /// `(value, ccdf)` pairs at the given abscissae, or at up to
    /// `max_points` automatically chosen ones (distinct sample values, or
    /// evenly spaced ranks when there are more).
    pub fn ccdf_dump(&self, points: Option<&[f64]>, max_points: usize) -> Vec<(f64, f64)> {
        if self.is_empty() {
            return Vec::new();
        }
        let xs: Vec<f64> = match points {
            Some(p) => {
                let mut p = p.to_vec();
                p.sort_by(f64::total_cmp);
                p
            }
            None => self.auto_abscissae(max_points.max(2)),
        };
        xs.into_iter()
            .map(|x| (x, self.ccdf_at(x).expect("non-empty")))
            .collect()
    }

    fn auto_abscissae(&self, max_points: usize) -> Vec<f64> {
        if self.finite == 0 {
            return Vec::new();
        }
        if let Store::Exact(_) = self.store {
            let mut uniq: Vec<f64> = self.sorted().to_vec();
            uniq.dedup();
            if uniq.len() <= max_points {
                return uniq;
            }
        }
        let mut xs: Vec<f64> = (0..max_points)
            .map(|i| {
                let h = (self.finite - 1) as f64 * i as f64 / (max_points - 1) as f64;
                self.value_at_rank(h)
            })
            .collect();
        xs.dedup();
        xs
    }

    /// Counts of each distinct finite value (exact mode only).
    pub fn value_counts(&self) -> Vec<(f64, u64)> {
        let mut out: Vec<(f64, u64)> = Vec::new();
        for &x in self.sorted() {
            match out.last_mut() {
                Some((v, c)) if *v == x => *c += 1,
                _ => out.push((x, 1)),
            }
        }
        out
    }
}

impl Extend<f64> for EmpiricalDistribution {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.push(x);
        }
    }
}

impl FromIterator<f64> for EmpiricalDistribution {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self::from_samples(iter)
    }
}

/// Named monotone counters; merge is componentwise sum.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSet(BTreeMap<String, u64>);

impl CounterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn incr(&mut self, name: &str, by: u64) {
        *self.0.entry(name.to_owned()).or_insert(0) += by;
    }

    pub fn get(&self, name: &str) -> u64 {
        self.0.get(name).copied().unwrap_or(0)
    }

    pub fn merge(&mut self, other: &CounterSet) {
        for (k, v) in &other.0 {
            self.incr(k, *v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Jain's fairness index `(Σx)² / (n·Σx²)`; 1 for an all-zero input.
pub fn jain_index(xs: &[f64]) -> f64 {
    let s: f64 = xs.iter().sum();
    let s2: f64 = xs.iter().map(|x| x * x).sum();
    if s2 == 0.0 {
        1.0
    } else {
        s * s / (xs.len() as f64 * s2)
    }
}
