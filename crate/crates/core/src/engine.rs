//! Deterministic slot-based event core.
//!
//! Events are ordered by `(fire_slot, priority, seqno)`, so dispatch order is
//! a pure function of the schedule calls. Random numbers come from
//! [`RngStream`]s: ChaCha8 keyed by SHA-256 of the master seed and a string
//! label, which gives the same variates on every platform.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub type Slot = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("cannot schedule event at slot {fire_slot}: clock is already at slot {now}")]
    PastSlot { fire_slot: Slot, now: Slot },
    #[error("slot duration must be positive, got {0}")]
    InvalidSlotDuration(f64),
}

/// Failure raised by an event handler, tagged with the offending event.
#[derive(Debug, Error)]
#[error("handler failed on event #{seqno} (slot {slot}, priority {priority}): {source}")]
pub struct DispatchError<E: std::error::Error + 'static> {
    pub slot: Slot,
    pub priority: u8,
    pub seqno: u64,
    #[source]
    pub source: E,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotClock {
    current_slot: Slot,
    slot_duration_ms: f64,
}

impl SlotClock {
    pub fn new(slot_duration_ms: f64) -> Result<Self, EngineError> {
        if !(slot_duration_ms > 0.0) || !slot_duration_ms.is_finite() {
            return Err(EngineError::InvalidSlotDuration(slot_duration_ms));
        }
        Ok(Self {
            current_slot: 0,
            slot_duration_ms,
        })
    }

    pub fn now(&self) -> Slot {
        self.current_slot
    }

    pub fn slot_duration_ms(&self) -> f64 {
        self.slot_duration_ms
    }

    pub fn to_ms(&self, slots: Slot) -> f64 {
        slots as f64 * self.slot_duration_ms
    }

    fn advance_to(&mut self, slot: Slot) {
        debug_assert!(slot >= self.current_slot);
        self.current_slot = self.current_slot.max(slot);
    }
}

impl Default for SlotClock {
    fn default() -> Self {
        Self {
            current_slot: 0,
            slot_duration_ms: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Event<P> {
    pub fire_slot: Slot,
    pub priority: u8,
    pub seqno: u64,
    pub payload: P,
}

impl<P> Event<P> {
    fn key(&self) -> (Slot, u8, u64) {
        (self.fire_slot, self.priority, self.seqno)
    }
}

impl<P> PartialEq for Event<P> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<P> Eq for Event<P> {}

impl<P> PartialOrd for Event<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so that BinaryHeap pops the smallest key first.
impl<P> Ord for Event<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    /// Dispatch every event with `fire_slot <= slot`.
    At(Slot),
    /// Dispatch until the queue is empty.
    Drained,
}

/// Single-threaded event queue plus clock.
#[derive(Debug)]
pub struct Engine<P> {
    clock: SlotClock,
    queue: BinaryHeap<Event<P>>,
    next_seqno: u64,
    dispatched: u64,
    trace: Option<Vec<String>>,
}

impl<P> Default for Engine<P> {
    fn default() -> Self {
        Self::new(SlotClock::default())
    }
}

impl<P> Engine<P> {
    pub fn new(clock: SlotClock) -> Self {
        Self {
            clock,
            queue: BinaryHeap::new(),
            next_seqno: 0,
            dispatched: 0,
            trace: None,
        }
    }

    /// Record one line per dispatched event.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn clock(&self) -> &SlotClock {
        &self.clock
    }

    pub fn now(&self) -> Slot {
        self.clock.now()
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    pub fn trace(&self) -> Option<&[String]> {
        self.trace.as_deref()
    }

    /// Clear queue, counters and clock so the engine can host another episode.
    pub fn reset(&mut self) {
        self.queue.clear();
        self.next_seqno = 0;
        self.dispatched = 0;
        self.clock.current_slot = 0;
        if let Some(t) = self.trace.as_mut() {
            t.clear();
        }
    }

    /// Enqueue `payload` to fire at `fire_slot`; returns the event's seqno.
    pub fn schedule(&mut self, fire_slot: Slot, priority: u8, payload: P) -> Result<u64, EngineError> {
        let now = self.clock.now();
        if fire_slot < now {
            return Err(EngineError::PastSlot { fire_slot, now });
        }
        let seqno = self.next_seqno;
        self.next_seqno += 1;
        self.queue.push(Event {
            fire_slot,
            priority,
            seqno,
            payload,
        });
        Ok(seqno)
    }

    pub fn peek_slot(&self) -> Option<Slot> {
        self.queue.peek().map(|e| e.fire_slot)
    }

    fn pop_until(&mut self, stop: Stop) -> Option<Event<P>>
    where
        P: fmt::Debug,
    {
        let next = self.queue.peek()?.fire_slot;
        if let Stop::At(limit) = stop {
            if next > limit {
                return None;
            }
        }
        let ev = self.queue.pop()?;
        self.clock.advance_to(ev.fire_slot);
        self.dispatched += 1;
        if let Some(t) = self.trace.as_mut() {
            t.push(format!(
                "{} {} {} {:?}",
                ev.fire_slot, ev.priority, ev.seqno, ev.payload
            ));
        }
        Some(ev)
    }

    /// Dispatch events in order until `stop`. The handler may schedule
    /// further events. Returns the final clock value: `stop` for
    /// [`Stop::At`], the last dispatched slot for [`Stop::Drained`].
    pub fn run_until<F, E>(&mut self, stop: Stop, mut handler: F) -> Result<Slot, DispatchError<E>>
    where
        P: fmt::Debug,
        E: std::error::Error + 'static,
        F: FnMut(&mut Self, Event<P>) -> Result<(), E>,
    {
        while let Some(ev) = self.pop_until(stop) {
            let (slot, priority, seqno) = ev.key();
            handler(self, ev).map_err(|source| DispatchError {
                slot,
                priority,
                seqno,
                source,
            })?;
        }
        if let Stop::At(limit) = stop {
            self.clock.advance_to(limit);
        }
        Ok(self.clock.now())
    }
}

/// A reproducible random stream identified by `(master_seed, stream_id)`.
///
/// The ChaCha8 key is `SHA-256("mcasim-rng-v1" || master_seed (LE) || stream_id)`.
/// [`RngStream::fork`] selects one of the 2^64 ChaCha streams under the same
/// key, so sub-streams indexed by packet, episode or run are independent and
/// addressable without consuming the parent.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: String,
    key: [u8; 32],
    rng: ChaCha8Rng,
}

const RNG_DOMAIN: &[u8] = b"mcasim-rng-v1";

fn derive_key(master_seed: u64, stream_id: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(RNG_DOMAIN);
    h.update(master_seed.to_le_bytes());
    h.update(stream_id.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    key
}

/// Deterministic u64 derived from a seed and a label (run seeds, sub-seeds).
pub fn derive_seed(master_seed: u64, label: &str) -> u64 {
    let key = derive_key(master_seed, label);
    u64::from_le_bytes(key[..8].try_into().expect("8 bytes"))
}

pub fn spawn_stream(master_seed: u64, stream_id: &str) -> RngStream {
    RngStream::new(master_seed, stream_id)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: impl Into<String>) -> Self {
        let stream_id = stream_id.into();
        let key = derive_key(master_seed, &stream_id);
        Self {
            master_seed,
            rng: ChaCha8Rng::from_seed(key),
            stream_id,
            key,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> &str {
        &self.stream_id
    }

    /// Independent sub-stream `index` of this stream, starting at its first variate.
    pub fn fork(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }

    /// The `counter`-th u64 of sub-stream `index`, without keeping state.
    pub fn u64_at(&self, index: u64, counter: u64) -> u64 {
        let mut rng = self.fork(index);
        rng.set_word_pos(u128::from(counter) * 2);
        rng.next_u64()
    }

    pub fn uniform_at(&self, index: u64, counter: u64) -> f64 {
        unit_f64(self.u64_at(index, counter))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        unit_f64(self.rng.next_u64())
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[inline]
pub fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `[0, 1)` from any generator.
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    unit_f64(rng.next_u64())
}

/// Exponential variate with the given mean, by inversion.
#[inline]
pub fn exponential<R: RngCore + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    -mean * (1.0 - uniform(rng)).ln()
}

/// Uniform integer in `0..n` (Lemire-style widening multiply, no rejection;
/// bias is below 2^-32 for the sizes used here).
#[inline]
pub fn below<R: RngCore + ?Sized>(rng: &mut R, n: u64) -> u64 {
    ((u128::from(rng.next_u64()) * u128::from(n)) >> 64) as u64
}
