//! Maximum booked occupancy over a unit slot, and conditional virtual blocking.
//!
//! `N_i^s` is the set-`s` pre-arrival process whose customers depart over
//! `(i, i + 1]` (so they start over `(i - s, i - s + 1]`). The maximum number
//! of customers present over `(d, d + 1]` is
//!
//! ```text
//! A_d = sum_{s >= 2} sum_{i = d+1}^{d+s-1} N_i^s(1)
//!     + max_r { sum_s D_d^s(1 - r) + sum_s N_{d+s}^s(r) }
//! ```
//!
//! with `D_d^s` the mirror image of `N_d^s`. Each process is drawn once per
//! sample, as a set of offsets in `(0, 1]`, and reused by every `A_d` that
//! mentions it: a set-`s` customer starting at offset `x` of its start slot
//! departs at the same offset `s` slots later.

use alloc::vec::Vec;

use super::opposing::opposing_max_direct;
use super::push_poisson_points;
use crate::distributions::MergedDistribution;
use crate::rng::{self, substream};
use crate::stats::{Estimate, Tally};
use crate::{Error, Result};

/// One `N_i^s` appearing in an `A_d` expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessTerm {
    /// Departure slot index `i`.
    pub slot: u32,
    /// Service time `s`.
    pub service: u32,
    pub rate: f64,
}

/// The three groups of terms that make up `A_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOccupancyTerms {
    pub slot: u32,
    /// Customers in service throughout the slot (full counts, outside the max).
    pub in_service: Vec<ProcessTerm>,
    /// Departures over the slot, mirrored (inside the max).
    pub departures: Vec<ProcessTerm>,
    /// Pre-arrivals starting service in the slot (inside the max).
    pub prearrivals: Vec<ProcessTerm>,
}

fn services(dist: &MergedDistribution) -> Vec<u32> {
    (1..=dist.max_duration())
        .filter(|&s| dist.service_marginal(s) > 0.0)
        .collect()
}

/// Builds the term structure of `A_d`.
pub fn slot_occupancy_terms(dist: &MergedDistribution, d: u32) -> Result<SlotOccupancyTerms> {
    let term = |slot: u32, service: u32| -> Result<ProcessTerm> {
        Ok(ProcessTerm {
            slot,
            service,
            rate: dist.pre_arrival_rate(slot, service)?,
        })
    };
    let svc = services(dist);
    let mut in_service = Vec::new();
    let mut departures = Vec::new();
    let mut prearrivals = Vec::new();
    for &s in &svc {
        for i in d + 1..d + s {
            in_service.push(term(i, s)?);
        }
    }
    for &s in &svc {
        departures.push(term(d, s)?);
    }
    for &s in &svc {
        prearrivals.push(term(d + s, s)?);
    }
    Ok(SlotOccupancyTerms {
        slot: d,
        in_service,
        departures,
        prearrivals,
    })
}

/// Sample count and threshold for estimating `P(A_d >= C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancySampleSpec {
    pub dist: MergedDistribution,
    pub slot: u32,
    pub threshold: u32,
    pub samples: u64,
}

/// Point sets of every `N_i^s` with `i` in `lo..=hi`, redrawn per sample.
struct ProcessBank {
    lo: u32,
    services: Vec<u32>,
    rates: Vec<f64>,
    poissons: Vec<Option<rand_distr::Poisson<f64>>>,
    points: Vec<Vec<f64>>,
}

impl ProcessBank {
    fn new(dist: &MergedDistribution, lo: u32, hi: u32) -> Result<Self> {
        let services = services(dist);
        let mut rates = Vec::new();
        for i in lo..=hi {
            for &s in &services {
                rates.push(dist.pre_arrival_rate(i, s)?);
            }
        }
        let poissons = rates
            .iter()
            .map(|&r| (r > 0.0).then(|| rand_distr::Poisson::new(r).unwrap()))
            .collect();
        let points = rates.iter().map(|_| Vec::new()).collect();
        Ok(Self {
            lo,
            services,
            rates,
            poissons,
            points,
        })
    }

    fn index(&self, slot: u32, service: u32) -> usize {
        let s_idx = self
            .services
            .iter()
            .position(|&s| s == service)
            .expect("service in bank");
        (slot - self.lo) as usize * self.services.len() + s_idx
    }

    fn redraw<R: rand::Rng + ?Sized>(&mut self, rng: &mut R) {
        for ((pts, &rate), poisson) in self.points.iter_mut().zip(&self.rates).zip(&self.poissons) {
            pts.clear();
            push_poisson_points(rate, poisson.as_ref(), rng, pts);
        }
    }

    fn occupancy_max(
        &self,
        terms: &SlotOccupancyTerms,
        dep: &mut Vec<f64>,
        arr: &mut Vec<f64>,
    ) -> u32 {
        let base: usize = terms
            .in_service
            .iter()
            .map(|t| self.points[self.index(t.slot, t.service)].len())
            .sum();
        dep.clear();
        arr.clear();
        for t in &terms.departures {
            dep.extend_from_slice(&self.points[self.index(t.slot, t.service)]);
        }
        for t in &terms.prearrivals {
            arr.extend_from_slice(&self.points[self.index(t.slot, t.service)]);
        }
        base as u32 + opposing_max_direct(dep, arr)
    }
}

/// Tally of `max(A_d, ..., A_{d+len-1}) >= C` over one chunk of samples.
pub fn window_blocking_chunk(
    dist: &MergedDistribution,
    first_slot: u32,
    len: u32,
    threshold: u32,
    seed: u64,
    chunk_index: u64,
    chunk_len: u64,
) -> Result<Tally> {
    if len == 0 {
        return Err(Error::param("len", "window must cover at least one slot"));
    }
    let last = first_slot + len - 1;
    let terms: Vec<SlotOccupancyTerms> = (first_slot..=last)
        .map(|d| slot_occupancy_terms(dist, d))
        .collect::<Result<_>>()?;
    let mut bank = ProcessBank::new(dist, first_slot, last + dist.max_duration())?;
    let mut rng = substream(seed, &[chunk_index]);
    let (mut dep, mut arr) = (Vec::new(), Vec::new());
    let mut tally = Tally::default();
    for _ in 0..chunk_len {
        bank.redraw(&mut rng);
        let peak = terms
            .iter()
            .map(|t| bank.occupancy_max(t, &mut dep, &mut arr))
            .max()
            .unwrap_or(0);
        tally.record(peak >= threshold);
    }
    Ok(tally)
}

fn window_blocking(
    dist: &MergedDistribution,
    first_slot: u32,
    len: u32,
    threshold: u32,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be >= 1"));
    }
    let mut tally = Tally::default();
    for (i, n) in rng::chunks(n_samples) {
        tally.merge(window_blocking_chunk(
            dist, first_slot, len, threshold, seed, i, n,
        )?);
    }
    Ok(tally.estimate().expect("samples drawn"))
}

/// Estimates `P(A_d >= C)`.
pub fn sample_slot_occupancy(spec: &OccupancySampleSpec, seed: u64) -> Result<Estimate> {
    if spec.slot > spec.dist.max_delay() {
        return Err(Error::param("slot", "must lie in [0, u]"));
    }
    window_blocking(&spec.dist, spec.slot, 1, spec.threshold, spec.samples, seed)
}

/// Estimates `P_d^s = P(max(A_d, ..., A_{d+s-1}) >= C)` with all slots
/// computed from the same draws.
pub fn conditional_virtual_blocking(
    dist: &MergedDistribution,
    d: u32,
    s: u32,
    threshold: u32,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    check_support(dist, d, s)?;
    window_blocking(dist, d, s, threshold, n_samples, seed)
}

/// Fails unless `(d, s)` has positive mass.
pub fn check_support(dist: &MergedDistribution, d: u32, s: u32) -> Result<()> {
    if dist.joint(d, s) <= 0.0 {
        return Err(Error::OutOfSupport { d, s });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::opposing::{opposing_max_exact_auto, OpposingProcessSpec};
    use crate::math::poisson_tail_ge;

    #[test]
    fn v2_structure_matches_worked_example() {
        let dist = MergedDistribution::from_joint(
            10.0,
            [(0, 1, 0.3), (1, 1, 0.2), (0, 2, 0.25), (2, 2, 0.25)],
        )
        .unwrap();
        let t = slot_occupancy_terms(&dist, 0).unwrap();
        let key = |v: &[ProcessTerm]| v.iter().map(|p| (p.slot, p.service)).collect::<Vec<_>>();
        assert_eq!(key(&t.in_service), [(1, 2)]);
        assert_eq!(key(&t.departures), [(0, 1), (0, 2)]);
        assert_eq!(key(&t.prearrivals), [(1, 1), (2, 2)]);
        for p in t
            .in_service
            .iter()
            .chain(&t.departures)
            .chain(&t.prearrivals)
        {
            assert_eq!(p.rate, dist.pre_arrival_rate(p.slot, p.service).unwrap());
        }
        let t1 = slot_occupancy_terms(&dist, 1).unwrap();
        assert_eq!(key(&t1.in_service), [(2, 2)]);
        assert_eq!(key(&t1.departures), [(1, 1), (1, 2)]);
        assert_eq!(key(&t1.prearrivals), [(2, 1), (3, 2)]);
    }

    #[test]
    fn immediate_unit_service_is_poisson_tail() {
        // D = 0, S = 1: nothing is booked ahead, slot 0 only sees departures.
        let lambda = 6.0;
        let dist = MergedDistribution::from_joint(lambda, [(0, 1, 1.0)]).unwrap();
        let spec = OccupancySampleSpec {
            dist,
            slot: 0,
            threshold: 7,
            samples: 60_000,
        };
        let est = sample_slot_occupancy(&spec, 5).unwrap();
        assert!(est.agrees_with(poisson_tail_ge(lambda, 7), 3.0), "{est:?}");
    }

    #[test]
    fn one_slot_ahead_balances_opposing_rates() {
        // D = 1, S = 1: departures and pre-arrivals over slot 0 both run at lambda.
        let lambda = 6.0;
        let dist = MergedDistribution::from_joint(lambda, [(1, 1, 1.0)]).unwrap();
        let spec = OccupancySampleSpec {
            dist,
            slot: 0,
            threshold: 8,
            samples: 40_000,
        };
        let est = sample_slot_occupancy(&spec, 6).unwrap();
        let exact =
            opposing_max_exact_auto(&OpposingProcessSpec::new(lambda, lambda, 8).unwrap()).unwrap();
        assert!(est.agrees_with(exact, 4.0), "{est:?} vs {exact}");
    }

    #[test]
    fn zero_threshold_always_blocks() {
        let dist = MergedDistribution::from_joint(3.0, [(0, 1, 0.5), (1, 2, 0.5)]).unwrap();
        let e = conditional_virtual_blocking(&dist, 1, 2, 0, 500, 1).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn unit_window_equals_slot_estimate() {
        let dist =
            MergedDistribution::from_joint(8.0, [(0, 1, 0.5), (1, 1, 0.3), (1, 2, 0.2)]).unwrap();
        let spec = OccupancySampleSpec {
            dist: dist.clone(),
            slot: 1,
            threshold: 8,
            samples: 9000,
        };
        assert_eq!(
            sample_slot_occupancy(&spec, 44).unwrap(),
            conditional_virtual_blocking(&dist, 1, 1, 8, 9000, 44).unwrap()
        );
    }

    #[test]
    fn two_point_slot_one_matches_poisson_tail() {
        let (lambda, gamma, c) = (20.0, 0.4, 14);
        let dist =
            MergedDistribution::from_joint(lambda, [(0, 1, gamma), (1, 1, 1.0 - gamma)]).unwrap();
        let e = conditional_virtual_blocking(&dist, 1, 1, c, 50_000, 9).unwrap();
        assert!(
            e.agrees_with(poisson_tail_ge((1.0 - gamma) * lambda, c), 3.0),
            "{e:?}"
        );
    }

    #[test]
    fn two_point_slot_zero_matches_exact_opposing() {
        let (lambda, gamma, c) = (20.0, 0.5, 20);
        let dist =
            MergedDistribution::from_joint(lambda, [(0, 1, gamma), (1, 1, 1.0 - gamma)]).unwrap();
        let e = conditional_virtual_blocking(&dist, 0, 1, c, 50_000, 10).unwrap();
        let exact = opposing_max_exact_auto(
            &OpposingProcessSpec::new(lambda, (1.0 - gamma) * lambda, c).unwrap(),
        )
        .unwrap();
        assert!(e.agrees_with(exact, 4.0), "{e:?} vs {exact}");
    }

    #[test]
    fn out_of_support_rejected() {
        let dist = MergedDistribution::from_joint(3.0, [(0, 1, 1.0)]).unwrap();
        assert_eq!(
            conditional_virtual_blocking(&dist, 1, 1, 2, 10, 0),
            Err(Error::OutOfSupport { d: 1, s: 1 })
        );
    }
}
