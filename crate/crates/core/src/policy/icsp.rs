//! The class selection policy and two baselines.

use rand::{Rng, RngCore};

use super::{fits, AdmissionPolicy, Decision, PolicySolution};
use crate::ledger::BookingLedger;
use crate::model::Request;
use crate::Result;

/// Improved class selection: classes past the LP cutoff are rejected, the
/// cutoff class passes a coin with its fractional `alpha`, and accepted
/// requests still need a free unit over their whole interval.
#[derive(Debug, Clone)]
pub struct Icsp {
    solution: PolicySolution,
}

impl Icsp {
    pub fn new(solution: PolicySolution) -> Self {
        Self { solution }
    }

    pub fn solution(&self) -> &PolicySolution {
        &self.solution
    }
}

impl AdmissionPolicy for Icsp {
    fn name(&self) -> &str {
        "icsp"
    }

    fn decide(
        &mut self,
        request: &Request,
        ledger: &BookingLedger,
        capacity: u32,
        rng: &mut dyn RngCore,
    ) -> Result<Decision> {
        let Some(rank) = self.solution.rank(request.class_id) else {
            return Ok(Decision::Reject);
        };
        let cutoff = self.solution.cutoff_rank();
        if rank > cutoff {
            return Ok(Decision::Reject);
        }
        if rank == cutoff {
            let alpha = self.solution.alpha[rank].alpha;
            if alpha < 1.0 && rng.random::<f64>() >= alpha {
                return Ok(Decision::Reject);
            }
        }
        Ok(if fits(request, ledger, capacity)? {
            Decision::Accept
        } else {
            Decision::Reject
        })
    }

    fn admits_class(&self, class_id: u32) -> bool {
        self.solution.class_alpha(class_id).is_some_and(|a| a > 0.0)
    }
}

/// Accepts whenever capacity allows.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdmitAll;

impl AdmissionPolicy for AdmitAll {
    fn name(&self) -> &str {
        "admit-all"
    }

    fn decide(
        &mut self,
        request: &Request,
        ledger: &BookingLedger,
        capacity: u32,
        _rng: &mut dyn RngCore,
    ) -> Result<Decision> {
        Ok(if fits(request, ledger, capacity)? {
            Decision::Accept
        } else {
            Decision::Reject
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RejectAll;

impl AdmissionPolicy for RejectAll {
    fn name(&self) -> &str {
        "reject-all"
    }

    fn decide(
        &mut self,
        _request: &Request,
        _ledger: &BookingLedger,
        _capacity: u32,
        _rng: &mut dyn RngCore,
    ) -> Result<Decision> {
        Ok(Decision::Reject)
    }

    fn admits_class(&self, _class_id: u32) -> bool {
        false
    }
}
