//! Booking profile: reserved occupancy as a step function of continuous time.
//!
//! Reservations are half-open intervals `[start, end)`. The profile is kept as
//! an ordered map of signed occupancy deltas (`+1` at every start, `-1` at
//! every end). Deltas sharing a timestamp are merged, so the occupancy at a
//! breakpoint always includes every change scheduled there.
//!
//! History before `floor` can be folded into a baseline with
//! [`BookingLedger::release_before`], which keeps long simulations in bounded
//! memory without changing any query at or after the cut.

use alloc::collections::BTreeMap;
use core::cmp::Ordering;
use core::ops::Bound::{Excluded, Included, Unbounded};

use crate::{Error, Result};

/// Totally ordered finite time stamp used as a map key.
#[derive(Debug, Clone, Copy)]
struct Instant(f64);

impl PartialEq for Instant {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Instant {}

impl PartialOrd for Instant {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Instant {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BookingLedger {
    deltas: BTreeMap<Instant, i64>,
    floor: f64,
    /// Occupancy just before `floor`, i.e. the net of all folded deltas.
    baseline: i64,
}

impl Default for BookingLedger {
    fn default() -> Self {
        Self::new()
    }
}

impl BookingLedger {
    pub fn new() -> Self {
        Self {
            deltas: BTreeMap::new(),
            floor: f64::NEG_INFINITY,
            baseline: 0,
        }
    }

    /// Earliest time that may still be queried or reserved.
    pub fn horizon_floor(&self) -> f64 {
        self.floor
    }

    /// Number of live breakpoints.
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty() && self.baseline == 0
    }

    fn check_interval(&self, start: f64, end: f64) -> Result<()> {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::InvalidInterval { start, end });
        }
        if start < self.floor {
            return Err(Error::HistoryCollected {
                requested: start,
                floor: self.floor,
            });
        }
        Ok(())
    }

    fn add_delta(&mut self, at: f64, delta: i64) {
        let slot = self.deltas.entry(Instant(at)).or_insert(0);
        *slot += delta;
        if *slot == 0 {
            self.deltas.remove(&Instant(at));
        }
    }

    /// Books one unit over `[start, end)`. Capacity is not checked here.
    pub fn reserve(&mut self, start: f64, end: f64) -> Result<()> {
        self.check_interval(start, end)?;
        self.add_delta(start, 1);
        self.add_delta(end, -1);
        Ok(())
    }

    /// Occupancy at time `t` (all deltas at `t` applied).
    pub fn occupancy_at(&self, t: f64) -> Result<u32> {
        if t < self.floor {
            return Err(Error::HistoryCollected {
                requested: t,
                floor: self.floor,
            });
        }
        Ok(to_count(self.prefix_through(t)))
    }

    fn prefix_through(&self, t: f64) -> i64 {
        self.baseline
            + self
                .deltas
                .range((Unbounded, Included(Instant(t))))
                .map(|(_, d)| d)
                .sum::<i64>()
    }

    /// Maximum occupancy over the half-open interval `[start, end)`.
    pub fn max_occupancy(&self, start: f64, end: f64) -> Result<u32> {
        self.check_interval(start, end)?;
        let mut level = self.prefix_through(start);
        let mut best = level;
        for (_, d) in self
            .deltas
            .range((Excluded(Instant(start)), Excluded(Instant(end))))
        {
            level += d;
            best = best.max(level);
        }
        Ok(to_count(best))
    }

    /// Folds every breakpoint strictly before `t` into the baseline and moves
    /// the floor to `t`. A cut at or before the current floor is a no-op.
    pub fn release_before(&mut self, t: f64) {
        if t.is_nan() || t <= self.floor {
            return;
        }
        let keep = self.deltas.split_off(&Instant(t));
        let folded: i64 = self.deltas.values().sum();
        self.baseline += folded;
        self.deltas = keep;
        self.floor = t;
    }

    /// Breakpoints in time order, as `(time, delta)`.
    pub fn breakpoints(&self) -> impl Iterator<Item = (f64, i64)> + '_ {
        self.deltas.iter().map(|(k, d)| (k.0, *d))
    }

    /// Occupancy level reached after the last breakpoint.
    pub fn final_level(&self) -> i64 {
        self.baseline + self.deltas.values().sum::<i64>()
    }

    /// Largest occupancy anywhere at or after the floor.
    pub fn peak(&self) -> u32 {
        let mut level = self.baseline;
        let mut best = level;
        for d in self.deltas.values() {
            level += d;
            best = best.max(level);
        }
        to_count(best)
    }
}

fn to_count(level: i64) -> u32 {
    debug_assert!(level >= 0, "negative occupancy {level}");
    level.max(0) as u32
}
