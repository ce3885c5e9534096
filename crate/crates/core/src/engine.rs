//! Discrete-event scheduler and seeded random streams.
//!
//! Time is kept as an integer count of microseconds so that every timestamp
//! printed to a trace can be parsed back without loss.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::ops::{Add, Sub};

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

const MICROS_PER_SEC: u64 = 1_000_000;

/// Simulation time, microsecond resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * MICROS_PER_SEC)
    }

    /// Rounds to the nearest microsecond. Negative and NaN inputs clamp to zero.
    pub fn from_secs_f64(s: f64) -> Self {
        if s.is_nan() || s <= 0.0 {
            return SimTime::ZERO;
        }
        SimTime((s * MICROS_PER_SEC as f64).round() as u64)
    }

    /// Like [`SimTime::from_secs_f64`] but never rounds down; used for
    /// durations that must stay strictly positive.
    pub fn from_secs_f64_ceil(s: f64) -> Self {
        if s.is_nan() || s <= 0.0 {
            return SimTime::ZERO;
        }
        SimTime((s * MICROS_PER_SEC as f64).ceil() as u64)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    pub fn checked_mul(self, k: u64) -> Option<SimTime> {
        self.0.checked_mul(k).map(SimTime)
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

/// Six decimal places, e.g. `10.250000`.
impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / MICROS_PER_SEC, self.0 % MICROS_PER_SEC)
    }
}

/// Returned by [`Scheduler::schedule`]; names one pending event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle {
    owner: u64,
    sequence: u64,
}

impl EventHandle {
    pub fn sequence(&self) -> u64 {
        self.sequence
    }
}

/// Priority queue of timestamped events, dispatched in `(time, sequence)`
/// order. Equal timestamps fire in insertion order.
pub struct Scheduler<E> {
    owner: u64,
    now: SimTime,
    next_sequence: u64,
    queue: BinaryHeap<Reverse<(SimTime, u64)>>,
    pending: HashMap<u64, E>,
}

impl<E> Scheduler<E> {
    /// `owner` tags every handle this scheduler issues; cancelling a handle
    /// carrying a different tag is a programming error.
    pub fn new(owner: u64) -> Self {
        Scheduler {
            owner,
            now: SimTime::ZERO,
            next_sequence: 0,
            queue: BinaryHeap::new(),
            pending: HashMap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Panics if `at` lies in the past.
    pub fn schedule(&mut self, at: SimTime, event: E) -> EventHandle {
        assert!(
            at >= self.now,
            "event scheduled in the past: {} < now {}",
            at,
            self.now
        );
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.queue.push(Reverse((at, sequence)));
        self.pending.insert(sequence, event);
        EventHandle {
            owner: self.owner,
            sequence,
        }
    }

    pub fn schedule_in(&mut self, delay: SimTime, event: E) -> EventHandle {
        self.schedule(self.now + delay, event)
    }

    /// Returns the event if it was still pending. Cancelling a fired or
    /// already-cancelled event is a no-op.
    pub fn cancel(&mut self, handle: EventHandle) -> Option<E> {
        assert!(
            handle.owner == self.owner && handle.sequence < self.next_sequence,
            "foreign event handle {handle:?}"
        );
        self.pending.remove(&handle.sequence)
    }

    /// Pops the next live event with `fire_at <= horizon` and advances the clock.
    pub fn pop_until(&mut self, horizon: SimTime) -> Option<(SimTime, E)> {
        while let Some(&Reverse((at, sequence))) = self.queue.peek() {
            if at > horizon {
                return None;
            }
            self.queue.pop();
            if let Some(event) = self.pending.remove(&sequence) {
                self.now = at;
                return Some((at, event));
            }
        }
        None
    }

    /// Dispatches every event up to and including `horizon`.
    pub fn run_until<F>(&mut self, horizon: SimTime, mut handler: F) -> usize
    where
        F: FnMut(&mut Self, SimTime, E),
    {
        let mut dispatched = 0;
        while let Some((at, event)) = self.pop_until(horizon) {
            handler(self, at, event);
            dispatched += 1;
        }
        dispatched
    }

    /// Pending events in unspecified order.
    pub fn pending(&self) -> impl Iterator<Item = &E> {
        self.pending.values()
    }
}

/// Independent random substreams of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamLabel {
    Mobility,
    Traffic,
    ChannelJitter,
    Protocol,
}

impl StreamLabel {
    fn stream_id(self) -> u64 {
        match self {
            StreamLabel::Mobility => 1,
            StreamLabel::Traffic => 2,
            StreamLabel::ChannelJitter => 3,
            StreamLabel::Protocol => 4,
        }
    }
}

/// ChaCha12 keyed by `seed_from_u64(seed)`, with the label selecting the
/// 64-bit ChaCha stream id. Uniform reals use the top 53 bits of each draw.
pub struct RngStream {
    label: StreamLabel,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, label: StreamLabel) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(label.stream_id());
        RngStream { label, rng }
    }

    pub fn label(&self) -> StreamLabel {
        self.label
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`. Panics unless `lo < hi`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        assert!(lo < hi, "empty uniform range [{lo}, {hi})");
        let v = lo + (hi - lo) * self.unit();
        if v >= hi {
            // rounding can land exactly on hi for narrow ranges
            f64::from_bits(hi.to_bits() - 1).max(lo)
        } else {
            v
        }
    }

    /// Uniform integer in `[0, n)`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0);
        ((self.unit() * n as f64) as usize).min(n - 1)
    }

    /// Uniform duration in `[0, max]`, microsecond granularity.
    pub fn duration_upto(&mut self, max: SimTime) -> SimTime {
        if max == SimTime::ZERO {
            return SimTime::ZERO;
        }
        SimTime::from_micros((self.unit() * (max.as_micros() + 1) as f64) as u64)
            .min(max)
    }
}
