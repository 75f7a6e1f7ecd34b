//! Discrete-event simulation of the booking system.
//!
//! Arrivals follow the merged Poisson process: exponential gaps at the total
//! rate, the class drawn by `lambda_k / lambda`, then `(d, s)` from the class
//! pmf. Arrivals and policy coins use separate streams, so two policies run
//! with one seed see the same customers.

mod bench;
mod periods;

pub use bench::{benchmark, summarize, BenchModel, BenchRow, Reference};
pub use periods::{run_periods, PeriodRun};

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::{weighted::WeightedIndex, Distribution, Exp};

use crate::ledger::BookingLedger;
use crate::model::{Request, SystemConfig};
use crate::policy::{AdmissionPolicy, Decision};
use crate::rng::{substream, StreamRng};
use crate::stats::{Estimate, Tally};
use crate::{Error, Result};

const ARRIVAL_STREAM: u64 = 0;
const POLICY_STREAM: u64 = 1;

/// Counts for one `(class, d, s)` type after warm-up.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub class_id: u32,
    pub d: u32,
    pub s: u32,
    pub offered: u64,
    pub accepted: u64,
    /// `Q_dsk`; absent when nothing was offered, except that classes the
    /// policy never admits report 1.
    pub blocking: Option<Estimate>,
}

/// Virtual blocking of one `(d, s)` type in the infinite-capacity twin.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualCell {
    pub d: u32,
    pub s: u32,
    pub offered: u64,
    pub blocked: u64,
    pub estimate: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub policy: alloc::string::String,
    pub seed: u64,
    pub horizon: f64,
    pub warmup: f64,
    pub cells: Vec<CellReport>,
    /// Reward collected after warm-up divided by `horizon - warmup`.
    pub revenue_rate: f64,
    /// Highest booked occupancy seen right after any acceptance.
    pub peak_occupancy: u32,
    /// Filled by [`run_coupled`] on the twin's report.
    pub virtual_blocking: Vec<VirtualCell>,
}

impl SimReport {
    pub fn effective_horizon(&self) -> f64 {
        self.horizon - self.warmup
    }

    pub fn cell(&self, class_id: u32, d: u32, s: u32) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.class_id == class_id && c.d == d && c.s == s)
    }

    pub fn virtual_cell(&self, d: u32, s: u32) -> Option<&VirtualCell> {
        self.virtual_blocking.iter().find(|c| c.d == d && c.s == s)
    }

    /// Revenue rate recomputed from the accepted counts.
    pub fn revenue_from_cells(&self, config: &SystemConfig) -> f64 {
        let total: f64 = self
            .cells
            .iter()
            .map(|c| {
                let r = config.class(c.class_id).map_or(0.0, |k| k.reward_rate());
                r * c.s as f64 * c.accepted as f64
            })
            .sum();
        total / self.effective_horizon()
    }

    /// Blocking pooled over all types.
    pub fn overall_blocking(&self) -> Option<Estimate> {
        let offered: u64 = self.cells.iter().map(|c| c.offered).sum();
        let accepted: u64 = self.cells.iter().map(|c| c.accepted).sum();
        Tally {
            hits: offered - accepted,
            trials: offered,
        }
        .estimate()
    }
}

/// Generator of the merged arrival stream.
pub struct ArrivalStream<'a> {
    config: &'a SystemConfig,
    rng: StreamRng,
    gap: Option<Exp<f64>>,
    class_pick: Option<WeightedIndex<f64>>,
    time: f64,
    sequence: u64,
}

impl<'a> ArrivalStream<'a> {
    pub fn new(config: &'a SystemConfig, seed: u64) -> Result<Self> {
        let total = config.total_arrival_rate();
        let (gap, class_pick) = if total > 0.0 {
            let gap = Exp::new(total).map_err(|_| Error::param("classes", "bad total rate"))?;
            let pick = WeightedIndex::new(config.classes.iter().map(|c| c.arrival_rate()))
                .map_err(|_| Error::param("classes", "bad arrival rates"))?;
            (Some(gap), Some(pick))
        } else {
            (None, None)
        };
        Ok(Self {
            config,
            rng: substream(seed, &[ARRIVAL_STREAM]),
            gap,
            class_pick,
            time: 0.0,
            sequence: 0,
        })
    }
}

impl Iterator for ArrivalStream<'_> {
    type Item = Request;

    fn next(&mut self) -> Option<Request> {
        let (gap, pick) = (self.gap.as_ref()?, self.class_pick.as_ref()?);
        self.time += gap.sample(&mut self.rng);
        if self.time >= self.config.horizon {
            return None;
        }
        let class = &self.config.classes[pick.sample(&mut self.rng)];
        let (delay, duration) = class.sample_type(&mut self.rng);
        let request = Request {
            class_id: class.class_id(),
            arrival_time: self.time,
            delay,
            duration,
            sequence_number: self.sequence,
        };
        self.sequence += 1;
        Some(request)
    }
}

struct Counts {
    cells: BTreeMap<(u32, u32, u32), (u64, u64)>,
}

impl Counts {
    fn new(config: &SystemConfig) -> Self {
        let mut cells = BTreeMap::new();
        for class in &config.classes {
            for m in class.pmf() {
                cells.insert((class.class_id(), m.delay, m.duration), (0, 0));
            }
        }
        Self { cells }
    }

    fn record(&mut self, r: &Request, accepted: bool) {
        let e = self
            .cells
            .entry((r.class_id, r.delay, r.duration))
            .or_default();
        e.0 += 1;
        e.1 += u64::from(accepted);
    }

    fn into_cells(self, policy: &dyn AdmissionPolicy) -> Vec<CellReport> {
        self.cells
            .into_iter()
            .map(|((class_id, d, s), (offered, accepted))| {
                let blocking = if offered == 0 && !policy.admits_class(class_id) {
                    Some(Estimate {
                        value: 1.0,
                        std_error: 0.0,
                        n: 0,
                    })
                } else {
                    Tally {
                        hits: offered - accepted,
                        trials: offered,
                    }
                    .estimate()
                };
                CellReport {
                    class_id,
                    d,
                    s,
                    offered,
                    accepted,
                    blocking,
                }
            })
            .collect()
    }
}

struct Engine<'a> {
    config: &'a SystemConfig,
    ledger: BookingLedger,
    counts: Counts,
    reward: f64,
    peak: u32,
    warmup: f64,
}

impl<'a> Engine<'a> {
    fn new(config: &'a SystemConfig, warmup: f64) -> Self {
        Self {
            config,
            ledger: BookingLedger::new(),
            counts: Counts::new(config),
            reward: 0.0,
            peak: 0,
            warmup,
        }
    }

    /// Runs the policy on one request; returns whether it was accepted.
    fn offer(
        &mut self,
        request: &Request,
        policy: &mut dyn AdmissionPolicy,
        rng: &mut dyn RngCore,
    ) -> Result<bool> {
        self.ledger.release_before(request.arrival_time);
        let decision = policy.decide(request, &self.ledger, self.config.capacity, rng)?;
        let accepted = decision == Decision::Accept;
        if accepted {
            self.ledger.reserve(request.start(), request.end())?;
            let occ = self.ledger.max_occupancy(request.start(), request.end())?;
            self.peak = self.peak.max(occ);
        }
        if request.arrival_time >= self.warmup {
            self.counts.record(request, accepted);
            if accepted {
                let r = self
                    .config
                    .class(request.class_id)
                    .map_or(0.0, |k| k.reward_rate());
                self.reward += r * request.duration as f64;
            }
        }
        Ok(accepted)
    }

    fn report(self, policy: &dyn AdmissionPolicy, seed: u64) -> SimReport {
        let horizon = self.config.horizon;
        SimReport {
            policy: policy.name().into(),
            seed,
            horizon,
            warmup: self.warmup,
            cells: self.counts.into_cells(policy),
            revenue_rate: self.reward / (horizon - self.warmup),
            peak_occupancy: self.peak,
            virtual_blocking: Vec::new(),
        }
    }
}

/// Simulates `policy` on `config` over `[0, horizon)`.
pub fn run(
    config: &SystemConfig,
    policy: &mut dyn AdmissionPolicy,
    seed: u64,
) -> Result<SimReport> {
    config.validate()?;
    let warmup = config.warmup()?;
    let mut engine = Engine::new(config, warmup);
    let mut policy_rng = substream(seed, &[POLICY_STREAM]);
    for request in ArrivalStream::new(config, seed)? {
        engine.offer(&request, policy, &mut policy_rng)?;
    }
    Ok(engine.report(policy, seed))
}

/// Capacitated system and infinite-capacity twin on one arrival stream.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledReport {
    pub capacitated: SimReport,
    /// The twin accepts everyone; its report carries the virtual blocking.
    pub twin: SimReport,
    /// Requests accepted by the capacitated system and checked against the twin.
    pub checked: u64,
}

struct Unlimited;

impl AdmissionPolicy for Unlimited {
    fn name(&self) -> &str {
        "twin"
    }

    fn decide(
        &mut self,
        _request: &Request,
        _ledger: &BookingLedger,
        _capacity: u32,
        _rng: &mut dyn RngCore,
    ) -> Result<Decision> {
        Ok(Decision::Accept)
    }
}

/// Runs `policy` and the infinite-capacity twin side by side. Every
/// acceptance is checked to be present in the twin, and the capacitated
/// booked occupancy over the request never exceeds the twin's.
pub fn run_coupled(
    config: &SystemConfig,
    policy: &mut dyn AdmissionPolicy,
    seed: u64,
) -> Result<CoupledReport> {
    config.validate()?;
    let warmup = config.warmup()?;
    let mut cap = Engine::new(config, warmup);
    let mut twin = Engine::new(config, warmup);
    let mut policy_rng = substream(seed, &[POLICY_STREAM]);
    let mut twin_rng = substream(seed, &[POLICY_STREAM, 1]);
    let mut virtual_counts: BTreeMap<(u32, u32), (u64, u64)> = BTreeMap::new();
    for class in &config.classes {
        for m in class.pmf() {
            virtual_counts.insert((m.delay, m.duration), (0, 0));
        }
    }
    let mut checked = 0;
    for request in ArrivalStream::new(config, seed)? {
        twin.ledger.release_before(request.arrival_time);
        let twin_occ = twin.ledger.max_occupancy(request.start(), request.end())?;
        let cap_before = {
            cap.ledger.release_before(request.arrival_time);
            cap.ledger.max_occupancy(request.start(), request.end())?
        };
        if cap_before > twin_occ {
            return Err(Error::param(
                "coupling",
                alloc::format!(
                    "capacitated occupancy above twin at request {}",
                    request.sequence_number
                ),
            ));
        }
        if request.arrival_time >= warmup {
            let e = virtual_counts
                .entry((request.delay, request.duration))
                .or_default();
            e.0 += 1;
            e.1 += u64::from(twin_occ >= config.capacity);
        }
        let accepted = cap.offer(&request, policy, &mut policy_rng)?;
        let in_twin = twin.offer(&request, &mut Unlimited, &mut twin_rng)?;
        if accepted {
            if !in_twin {
                return Err(Error::param(
                    "coupling",
                    alloc::format!(
                        "request {} accepted but missing in twin",
                        request.sequence_number
                    ),
                ));
            }
            checked += 1;
        }
    }
    let capacitated = cap.report(policy, seed);
    let mut twin_report = twin.report(&Unlimited, seed);
    twin_report.virtual_blocking = virtual_counts
        .into_iter()
        .map(|((d, s), (offered, blocked))| VirtualCell {
            d,
            s,
            offered,
            blocked,
            estimate: Tally {
                hits: blocked,
                trials: offered,
            }
            .estimate(),
        })
        .collect();
    Ok(CoupledReport {
        capacitated,
        twin: twin_report,
        checked,
    })
}

/// Draws a uniform on `[0, 1)` from a trait object.
pub(crate) fn uniform(rng: &mut dyn RngCore) -> f64 {
    rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::erlang_b;
    use crate::model::ClassSpec;
    use crate::policy::{AdmitAll, RejectAll};
    use alloc::vec;

    fn config(capacity: u32, classes: Vec<ClassSpec>, horizon: f64) -> SystemConfig {
        SystemConfig {
            capacity,
            classes,
            epsilon: 0.01,
            horizon,
            warmup_fraction: 0.1,
        }
    }

    #[test]
    fn huge_capacity_blocks_nothing() {
        let cfg = config(
            1000,
            vec![ClassSpec::new(1, 5.0, 1.0, [(0, 1, 0.5), (2, 3, 0.5)]).unwrap()],
            500.0,
        );
        let rep = run(&cfg, &mut AdmitAll, 1).unwrap();
        assert!(rep
            .cells
            .iter()
            .all(|c| c.accepted == c.offered && c.offered > 0));
        assert!((rep.revenue_rate - rep.revenue_from_cells(&cfg)).abs() < 1e-9);
    }

    #[test]
    fn reject_all_earns_nothing() {
        let cfg = config(
            5,
            vec![
                ClassSpec::new(1, 2.0, 1.0, [(0, 1, 1.0)]).unwrap(),
                ClassSpec::new(2, 0.0, 1.0, [(1, 1, 1.0)]).unwrap(),
            ],
            200.0,
        );
        let rep = run(&cfg, &mut RejectAll, 2).unwrap();
        assert_eq!(rep.revenue_rate, 0.0);
        for c in &rep.cells {
            assert_eq!(c.blocking.unwrap().value, 1.0);
        }
        assert_eq!(rep.cell(2, 1, 1).unwrap().offered, 0);
    }

    #[test]
    fn unoffered_cells_are_absent_for_admitting_policies() {
        let cfg = config(
            5,
            vec![
                ClassSpec::new(1, 2.0, 1.0, [(0, 1, 1.0)]).unwrap(),
                ClassSpec::new(2, 0.0, 1.0, [(1, 1, 1.0)]).unwrap(),
            ],
            200.0,
        );
        let rep = run(&cfg, &mut AdmitAll, 2).unwrap();
        assert_eq!(rep.cell(2, 1, 1).unwrap().blocking, None);
    }

    #[test]
    fn same_seed_same_report() {
        let cfg = config(
            3,
            vec![ClassSpec::new(1, 4.0, 2.0, [(0, 1, 0.3), (1, 2, 0.7)]).unwrap()],
            300.0,
        );
        let a = run(&cfg, &mut AdmitAll, 9).unwrap();
        let b = run(&cfg, &mut AdmitAll, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.peak_occupancy <= 3);
        let c = run(&cfg, &mut AdmitAll, 10).unwrap();
        assert_ne!(a.cells, c.cells);
    }

    #[test]
    fn no_booking_ahead_matches_erlang() {
        let cfg = config(
            4,
            vec![ClassSpec::new(1, 3.0, 1.0, [(0, 1, 1.0)]).unwrap()],
            20_000.0,
        );
        let rep = run(&cfg, &mut AdmitAll, 11).unwrap();
        let q = rep.cell(1, 0, 1).unwrap().blocking.unwrap();
        // Consecutive customers are correlated; allow a wide band.
        assert!(
            (q.value - erlang_b(4, 3.0)).abs() < 8.0 * q.std_error,
            "{q:?}"
        );
    }

    #[test]
    fn zero_capacity_coupling() {
        let cfg = config(
            0,
            vec![ClassSpec::new(1, 3.0, 1.0, [(0, 1, 0.5), (1, 1, 0.5)]).unwrap()],
            100.0,
        );
        let rep = run_coupled(&cfg, &mut AdmitAll, 3).unwrap();
        assert!(rep.capacitated.cells.iter().all(|c| c.accepted == 0));
        assert!(rep.twin.cells.iter().all(|c| c.accepted == c.offered));
        assert_eq!(rep.checked, 0);
        for v in &rep.twin.virtual_blocking {
            assert_eq!(v.blocked, v.offered);
        }
    }

    #[test]
    fn coupled_capacitated_matches_plain_run() {
        let cfg = config(
            4,
            vec![ClassSpec::new(1, 3.0, 1.0, [(0, 1, 0.5), (1, 2, 0.5)]).unwrap()],
            400.0,
        );
        let plain = run(&cfg, &mut AdmitAll, 21).unwrap();
        let coupled = run_coupled(&cfg, &mut AdmitAll, 21).unwrap();
        assert_eq!(plain, coupled.capacitated);
        assert!(coupled.checked > 0);
    }

    #[test]
    fn horizon_shorter_than_warmup_is_an_error() {
        let cfg = config(
            4,
            vec![ClassSpec::new(1, 3.0, 1.0, [(5, 5, 1.0)]).unwrap()],
            40.0,
        );
        assert!(run(&cfg, &mut AdmitAll, 0).is_err());
    }
}
