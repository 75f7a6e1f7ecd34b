//! Virtual blocking in the infinite-capacity counterpart system.
//!
//! A customer is *virtually blocked* when the booked occupancy over its
//! requested interval, in a system that never rejects anyone, already reaches
//! `C`. This bounds the real blocking probability from above. The pieces:
//!
//! - [`walk`]: reduction of the opposing-process maximum to a random walk and
//!   the hitting probability of a downward-drifting walk;
//! - [`opposing`]: `P(X >= C)` for a departure process running against a
//!   pre-arrival process, exactly (dynamic program) and by Monte Carlo;
//! - [`occupancy`]: per-slot maximum occupancy `A_d` assembled from
//!   independent per-(slot, service) processes, and `P_d^s`;
//! - [`erlang`]: Erlang-B, the classical answer when nobody books ahead;
//! - [`sweep`]: high-volume regime sweeps.

pub mod erlang;
pub mod occupancy;
pub mod opposing;
pub mod sweep;
pub mod walk;

pub use erlang::erlang_b;
pub use occupancy::{
    check_support, conditional_virtual_blocking, sample_slot_occupancy, slot_occupancy_terms,
    OccupancySampleSpec, ProcessTerm, SlotOccupancyTerms,
};
pub use opposing::{
    opposing_max_direct, opposing_max_exact, opposing_max_exact_auto, opposing_max_mc,
    OpposingProcessSpec,
};
pub use sweep::{asymptotic_sweep, Regime, SweepCell, SweepRow};
pub use walk::{rw_hitting_prob, walk_statistics, RandomWalkSpec, WalkStatistics};

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use alloc::vec::Vec;

/// Appends `Poisson(rate)` uniform points on `(0, 1]` to `out`.
pub(crate) fn push_poisson_points<R: Rng + ?Sized>(
    rate: f64,
    poisson: Option<&Poisson<f64>>,
    rng: &mut R,
    out: &mut Vec<f64>,
) {
    if rate <= 0.0 {
        return;
    }
    let n = match poisson {
        Some(p) => p.sample(rng) as usize,
        None => Poisson::new(rate)
            .expect("positive finite rate")
            .sample(rng) as usize,
    };
    out.reserve(n);
    for _ in 0..n {
        // (0, 1]: a point exactly at 0 would never count as a departure.
        out.push(1.0 - rng.random::<f64>());
    }
}
