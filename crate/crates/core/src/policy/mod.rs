//! Admission policies.
//!
//! A policy sees each arriving [`Request`] together with the current booking
//! ledger and answers accept or reject. The engine reserves accepted
//! intervals; policies never mutate the ledger.

mod dp;
mod icsp;
mod lp;

pub use dp::{
    thinned_probabilities, DpClass, DpInstance, DpPolicy, DpSolver, DpWindow, ThresholdEntry,
    DP_STATE_LIMIT,
};
pub use icsp::{AdmitAll, Icsp, RejectAll};
pub use lp::{solve_knapsack_lp, ClassAlpha, PolicySolution};

use rand::RngCore;

use crate::ledger::BookingLedger;
use crate::model::Request;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn is_accept(self) -> bool {
        self == Decision::Accept
    }
}

pub trait AdmissionPolicy {
    fn name(&self) -> &str;

    /// Decides on `request` given the bookings so far and capacity `capacity`.
    fn decide(
        &mut self,
        request: &Request,
        ledger: &BookingLedger,
        capacity: u32,
        rng: &mut dyn RngCore,
    ) -> Result<Decision>;

    /// `false` if the policy turns away every request of this class.
    fn admits_class(&self, _class_id: u32) -> bool {
        true
    }
}

impl<P: AdmissionPolicy + ?Sized> AdmissionPolicy for &mut P {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn decide(
        &mut self,
        request: &Request,
        ledger: &BookingLedger,
        capacity: u32,
        rng: &mut dyn RngCore,
    ) -> Result<Decision> {
        (**self).decide(request, ledger, capacity, rng)
    }

    fn admits_class(&self, class_id: u32) -> bool {
        (**self).admits_class(class_id)
    }
}

/// `true` if the interval of `request` still has a free unit everywhere.
pub fn fits(request: &Request, ledger: &BookingLedger, capacity: u32) -> Result<bool> {
    Ok(ledger.max_occupancy(request.start(), request.end())? < capacity)
}
