//! Loss networks with advanced reservation.
//!
//! Customers of several classes arrive as Poisson streams and ask, at arrival
//! time `t`, for one unit of a shared resource pool over the future interval
//! `[t + d, t + d + s)`. This crate holds the allocation-only pieces:
//!
//! - [`ledger`]: the booking profile with interval-maximum occupancy queries,
//! - [`model`]: class, request and system configuration types,
//! - [`distributions`]: class merging and pre-arrival rates,
//! - [`analytics`]: virtual blocking via opposing Poisson processes, random
//!   walk reductions, Erlang-B and high-volume sweeps,
//! - [`policy`]: the knapsack LP, the class selection policy, baselines and
//!   a finite-horizon dynamic program,
//! - [`simulate`]: a discrete-event engine with an infinite-capacity twin,
//! - [`pricing`]: static pricing by Lagrangian bisection.
//!
//! Everything here is `no_std` (with `alloc`). File formats, the CLI and
//! thread-level parallelism live in the `lossnet` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod distributions;
mod error;
pub mod ledger;
pub(crate) mod math;
pub mod model;
pub mod policy;
pub mod pricing;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use ledger::BookingLedger;
pub use model::{ClassSpec, Request, SystemConfig, Warning};
