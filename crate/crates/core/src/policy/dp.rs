//! Finite-horizon dynamic program for small discrete instances.
//!
//! Time runs over periods `1..=T`, each with `c0` units. In every period at
//! most one request arrives: class `k` with probability `p_k`, asking for
//! periods `t + a ..= t + a + l - 1` (cut at `T`) and paying `r_k` per period
//! granted. The state at the start of period `t` is the remaining capacity of
//! periods `t..=T`, so the memo key is just that vector.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::{AdmissionPolicy, Decision};
use crate::ledger::BookingLedger;
use crate::model::{ClassSpec, Request, PMF_TOLERANCE};
use crate::{Error, Result};

/// Largest number of memoized states a solve may create.
pub const DP_STATE_LIMIT: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpWindow {
    /// Periods between arrival and the first requested period.
    pub offset: u32,
    pub length: u32,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpClass {
    pub class_id: u32,
    pub reward: f64,
    /// Probability of an arrival of this class in a period.
    pub arrival_prob: f64,
    pub windows: Vec<DpWindow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpInstance {
    pub periods: u32,
    pub capacity: u32,
    pub classes: Vec<DpClass>,
}

/// Per-period arrival probabilities `p_k = lambda_k delta / (1 + lambda delta)`.
pub fn thinned_probabilities(rates: &[f64], delta: f64) -> Result<Vec<f64>> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::param("delta", "must be finite and > 0"));
    }
    if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::param("rates", "must be finite and >= 0"));
    }
    let total: f64 = rates.iter().sum();
    Ok(rates
        .iter()
        .map(|r| r * delta / (1.0 + total * delta))
        .collect())
}

impl DpInstance {
    pub fn validate(&self) -> Result<()> {
        if self.periods == 0 {
            return Err(Error::param("periods", "must be >= 1"));
        }
        if self.capacity > u8::MAX as u32 {
            return Err(Error::param(
                "capacity",
                format!("{} exceeds 255", self.capacity),
            ));
        }
        if self.classes.is_empty() {
            return Err(Error::param("classes", "at least one class is required"));
        }
        let mut total = 0.0;
        for class in &self.classes {
            if !(0.0..=1.0).contains(&class.arrival_prob) {
                return Err(Error::param("arrival_prob", "must lie in [0, 1]"));
            }
            if !(class.reward.is_finite() && class.reward >= 0.0) {
                return Err(Error::param("reward", "must be finite and >= 0"));
            }
            total += class.arrival_prob;
            let mut mass = 0.0;
            for w in &class.windows {
                if w.length == 0 {
                    return Err(Error::param("windows", "length must be >= 1"));
                }
                if !(0.0..=1.0).contains(&w.prob) {
                    return Err(Error::param("windows", "probability outside [0, 1]"));
                }
                mass += w.prob;
            }
            if (mass - 1.0).abs() > PMF_TOLERANCE {
                return Err(Error::InvalidPmf {
                    class_id: class.class_id,
                    reason: format!("window probabilities sum to {mass}"),
                });
            }
        }
        if total > 1.0 + PMF_TOLERANCE {
            return Err(Error::param(
                "arrival_prob",
                format!("per-period probabilities sum to {total} > 1"),
            ));
        }
        let mut ids: Vec<u32> = self.classes.iter().map(|c| c.class_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("classes", "class ids must be unique"));
        }
        Ok(())
    }

    pub fn class(&self, class_id: u32) -> Option<&DpClass> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }

    /// Requested periods `(first, last)` for an arrival at `t`, cut at `T`;
    /// `None` when the window starts after the horizon.
    pub fn window_periods(&self, t: u32, offset: u32, length: u32) -> Option<(u32, u32)> {
        let first = t + offset;
        (first <= self.periods).then(|| (first, (first + length - 1).min(self.periods)))
    }

    /// The same classes in continuous-time form, one period per time unit,
    /// for the knapsack LP.
    pub fn class_specs(&self) -> Result<Vec<ClassSpec>> {
        self.classes
            .iter()
            .map(|c| {
                ClassSpec::new(
                    c.class_id,
                    c.arrival_prob,
                    c.reward,
                    c.windows.iter().map(|w| (w.offset, w.length, w.prob)),
                )
            })
            .collect()
    }
}

/// One row of the decision table: state, request, critical reward, action.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdEntry {
    pub period: u32,
    pub remaining: Vec<u32>,
    pub class_id: u32,
    pub first: u32,
    pub last: u32,
    pub reward: f64,
    pub critical_reward: f64,
    pub decision: Decision,
}

/// Lazily memoized value function.
#[derive(Debug, Clone)]
pub struct DpSolver {
    instance: DpInstance,
    /// Per period `t - 1`: `(probability, reward, first, last)` of each request.
    events: Vec<Vec<(f64, f64, u32, u32)>>,
    memo: BTreeMap<Vec<u8>, f64>,
    limit: usize,
}

impl DpSolver {
    pub fn new(instance: DpInstance) -> Result<Self> {
        Self::with_limit(instance, DP_STATE_LIMIT)
    }

    pub fn with_limit(instance: DpInstance, limit: usize) -> Result<Self> {
        instance.validate()?;
        let events = (1..=instance.periods)
            .map(|t| {
                let mut evs = Vec::new();
                for class in &instance.classes {
                    for w in &class.windows {
                        let p = class.arrival_prob * w.prob;
                        if p == 0.0 {
                            continue;
                        }
                        if let Some((first, last)) = instance.window_periods(t, w.offset, w.length)
                        {
                            let reward = class.reward * (last - first + 1) as f64;
                            evs.push((p, reward, first, last));
                        }
                    }
                }
                evs
            })
            .collect();
        Ok(Self {
            instance,
            events,
            memo: BTreeMap::new(),
            limit,
        })
    }

    pub fn instance(&self) -> &DpInstance {
        &self.instance
    }

    pub fn states_visited(&self) -> usize {
        self.memo.len()
    }

    /// `E V_1` from full capacity.
    pub fn solve(&mut self) -> Result<f64> {
        let full = vec![self.instance.capacity as u8; self.instance.periods as usize];
        self.value_of(&full)
    }

    /// `E V_t^c` for remaining capacities `c` of periods `t..=T`.
    pub fn value(&mut self, t: u32, remaining: &[u32]) -> Result<f64> {
        let state = self.state(t, remaining)?;
        self.value_of(&state)
    }

    /// `R_t^c(w)` for the periods `first..=last`; infinite when `w` does not fit.
    pub fn critical_reward(
        &mut self,
        t: u32,
        remaining: &[u32],
        first: u32,
        last: u32,
    ) -> Result<f64> {
        let state = self.state(t, remaining)?;
        self.critical_of(t, &state, first, last)
    }

    /// Accept iff `r |w| > R_t^c(w)`.
    pub fn decide(
        &mut self,
        t: u32,
        remaining: &[u32],
        class_id: u32,
        first: u32,
        last: u32,
    ) -> Result<Decision> {
        let class = self
            .instance
            .class(class_id)
            .ok_or_else(|| Error::param("class_id", format!("unknown class {class_id}")))?;
        let reward = class.reward * (last - first + 1) as f64;
        let critical = self.critical_reward(t, remaining, first, last)?;
        Ok(if reward > critical {
            Decision::Accept
        } else {
            Decision::Reject
        })
    }

    /// Decision table over every state reachable from full capacity.
    pub fn threshold_table(&mut self) -> Result<Vec<ThresholdEntry>> {
        let periods = self.instance.periods;
        let mut layer: BTreeSet<Vec<u8>> = BTreeSet::new();
        layer.insert(vec![self.instance.capacity as u8; periods as usize]);
        let mut table = Vec::new();
        for t in 1..=periods {
            let mut next = BTreeSet::new();
            for state in &layer {
                next.insert(state[1..].to_vec());
                for (class_id, reward, first, last) in self.requests(t) {
                    let critical = self.critical_of(t, state, first, last)?;
                    let gain = reward * (last - first + 1) as f64;
                    let decision = if gain > critical {
                        Decision::Accept
                    } else {
                        Decision::Reject
                    };
                    if decision.is_accept() {
                        next.insert(take(state, t, first, last)[1..].to_vec());
                    }
                    table.push(ThresholdEntry {
                        period: t,
                        remaining: state.iter().map(|&x| x as u32).collect(),
                        class_id,
                        first,
                        last,
                        reward: gain,
                        critical_reward: critical,
                        decision,
                    });
                }
            }
            if next.len() > self.limit {
                return Err(Error::StateSpaceExceeded { bound: self.limit });
            }
            layer = next;
        }
        Ok(table)
    }

    /// Distinct `(class, reward, first, last)` requests possible at `t`.
    fn requests(&self, t: u32) -> Vec<(u32, f64, u32, u32)> {
        let mut out = Vec::new();
        for class in &self.instance.classes {
            if class.arrival_prob == 0.0 {
                continue;
            }
            for w in &class.windows {
                if w.prob == 0.0 {
                    continue;
                }
                if let Some((first, last)) = self.instance.window_periods(t, w.offset, w.length) {
                    let req = (class.class_id, class.reward, first, last);
                    if !out.contains(&req) {
                        out.push(req);
                    }
                }
            }
        }
        out
    }

    fn state(&self, t: u32, remaining: &[u32]) -> Result<Vec<u8>> {
        let periods = self.instance.periods;
        if t == 0 || t > periods + 1 || remaining.len() != (periods + 1 - t) as usize {
            return Err(Error::InvalidState { t });
        }
        if remaining.iter().any(|&x| x > self.instance.capacity) {
            return Err(Error::InvalidState { t });
        }
        Ok(remaining.iter().map(|&x| x as u8).collect())
    }

    fn critical_of(&mut self, t: u32, state: &[u8], first: u32, last: u32) -> Result<f64> {
        if state.is_empty() || first < t || last < first || last > self.instance.periods {
            return Err(Error::InvalidState { t });
        }
        if !fits(state, t, first, last) {
            return Ok(f64::INFINITY);
        }
        let keep = self.value_of(&state[1..])?;
        let taken = take(state, t, first, last);
        let give = self.value_of(&taken[1..])?;
        Ok(keep - give)
    }

    fn value_of(&mut self, state: &[u8]) -> Result<f64> {
        if state.is_empty() {
            return Ok(0.0);
        }
        if let Some(&v) = self.memo.get(state) {
            return Ok(v);
        }
        let t = self.instance.periods + 1 - state.len() as u32;
        let skip = self.value_of(&state[1..])?;
        let mut total = skip;
        for i in 0..self.events[t as usize - 1].len() {
            let (p, reward, first, last) = self.events[t as usize - 1][i];
            if !fits(state, t, first, last) {
                continue;
            }
            let taken = take(state, t, first, last);
            let accept = reward + self.value_of(&taken[1..])?;
            if accept > skip {
                total += p * (accept - skip);
            }
        }
        if self.memo.len() >= self.limit {
            return Err(Error::StateSpaceExceeded { bound: self.limit });
        }
        self.memo.insert(state.to_vec(), total);
        Ok(total)
    }
}

fn fits(state: &[u8], t: u32, first: u32, last: u32) -> bool {
    (first..=last).all(|i| state[(i - t) as usize] > 0)
}

fn take(state: &[u8], t: u32, first: u32, last: u32) -> Vec<u8> {
    let mut out = state.to_vec();
    for i in first..=last {
        out[(i - t) as usize] -= 1;
    }
    out
}

/// The DP decision rule as an admission policy. Periods are the ledger
/// intervals `[i, i + 1)` and requests arrive at integer times `t`.
#[derive(Debug, Clone)]
pub struct DpPolicy {
    solver: DpSolver,
}

impl DpPolicy {
    pub fn new(solver: DpSolver) -> Self {
        Self { solver }
    }

    pub fn solver_mut(&mut self) -> &mut DpSolver {
        &mut self.solver
    }
}

impl AdmissionPolicy for DpPolicy {
    fn name(&self) -> &str {
        "dp"
    }

    fn decide(
        &mut self,
        request: &Request,
        ledger: &BookingLedger,
        _capacity: u32,
        _rng: &mut dyn RngCore,
    ) -> Result<Decision> {
        let periods = self.solver.instance.periods;
        let c0 = self.solver.instance.capacity;
        let t = request.arrival_time as u32;
        let first = t + request.delay;
        if first > periods || request.duration == 0 {
            return Ok(Decision::Reject);
        }
        let last = (first + request.duration - 1).min(periods);
        let mut remaining = Vec::with_capacity((periods + 1 - t) as usize);
        for i in t..=periods {
            let used = ledger.occupancy_at(i as f64)?;
            remaining.push(c0.saturating_sub(used));
        }
        self.solver
            .decide(t, &remaining, request.class_id, first, last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_class(periods: u32, capacity: u32, p: f64, r: f64) -> DpInstance {
        DpInstance {
            periods,
            capacity,
            classes: vec![DpClass {
                class_id: 1,
                reward: r,
                arrival_prob: p,
                windows: vec![DpWindow {
                    offset: 0,
                    length: 1,
                    prob: 1.0,
                }],
            }],
        }
    }

    fn two_class() -> DpInstance {
        DpInstance {
            periods: 4,
            capacity: 2,
            classes: vec![
                DpClass {
                    class_id: 1,
                    reward: 3.0,
                    arrival_prob: 0.3,
                    windows: vec![
                        DpWindow {
                            offset: 0,
                            length: 1,
                            prob: 0.5,
                        },
                        DpWindow {
                            offset: 1,
                            length: 2,
                            prob: 0.5,
                        },
                    ],
                },
                DpClass {
                    class_id: 2,
                    reward: 1.0,
                    arrival_prob: 0.6,
                    windows: vec![
                        DpWindow {
                            offset: 0,
                            length: 2,
                            prob: 0.7,
                        },
                        DpWindow {
                            offset: 2,
                            length: 1,
                            prob: 0.3,
                        },
                    ],
                },
            ],
        }
    }

    /// Expectimax over full histories: the state is the list of granted
    /// windows and capacity is recounted from it.
    fn expectimax(inst: &DpInstance, t: u32, granted: &mut Vec<(u32, u32)>) -> f64 {
        if t > inst.periods {
            return 0.0;
        }
        let free = |granted: &Vec<(u32, u32)>, i: u32| {
            inst.capacity as usize - granted.iter().filter(|&&(a, b)| a <= i && i <= b).count()
        };
        let skip = expectimax(inst, t + 1, granted);
        let mut total = 0.0;
        let mut none = 1.0;
        for class in &inst.classes {
            for w in &class.windows {
                let p = class.arrival_prob * w.prob;
                none -= p;
                let first = t + w.offset;
                if first > inst.periods {
                    total += p * skip;
                    continue;
                }
                let last = (first + w.length - 1).min(inst.periods);
                let mut best = skip;
                if (first..=last).all(|i| free(granted, i) > 0) {
                    granted.push((first, last));
                    let acc =
                        class.reward * (last - first + 1) as f64 + expectimax(inst, t + 1, granted);
                    granted.pop();
                    best = best.max(acc);
                }
                total += p * best;
            }
        }
        total + none * skip
    }

    #[test]
    fn single_period_single_unit() {
        let mut s = DpSolver::new(one_class(1, 1, 0.4, 2.5)).unwrap();
        assert!((s.solve().unwrap() - 0.4 * 2.5).abs() < 1e-15);
    }

    #[test]
    fn zero_rewards_give_zero_value() {
        let mut inst = two_class();
        for c in &mut inst.classes {
            c.reward = 0.0;
        }
        let mut s = DpSolver::new(inst).unwrap();
        assert_eq!(s.solve().unwrap(), 0.0);
        for e in s.threshold_table().unwrap() {
            if e.critical_reward.is_finite() {
                assert_eq!(e.critical_reward, 0.0);
            }
            assert_eq!(e.decision, Decision::Reject);
        }
    }

    #[test]
    fn matches_expectimax() {
        let inst = two_class();
        let mut s = DpSolver::new(inst.clone()).unwrap();
        let v = s.solve().unwrap();
        let oracle = expectimax(&inst, 1, &mut Vec::new());
        assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
    }

    #[test]
    fn infeasible_window_has_infinite_threshold() {
        let mut s = DpSolver::new(two_class()).unwrap();
        let r = s.critical_reward(2, &[0, 2, 2], 2, 3).unwrap();
        assert_eq!(r, f64::INFINITY);
        assert_eq!(s.decide(2, &[0, 2, 2], 2, 2, 3).unwrap(), Decision::Reject);
    }

    #[test]
    fn last_period_accepts_positive_reward() {
        let mut s = DpSolver::new(two_class()).unwrap();
        assert_eq!(s.critical_reward(4, &[1], 4, 4).unwrap(), 0.0);
        assert_eq!(s.decide(4, &[1], 2, 4, 4).unwrap(), Decision::Accept);
    }

    #[test]
    fn tie_rejects() {
        // Critical reward 0 and zero reward: r |w| = R, reject.
        let mut s = DpSolver::new(one_class(2, 1, 0.5, 0.0)).unwrap();
        assert_eq!(s.decide(2, &[1], 1, 2, 2).unwrap(), Decision::Reject);
    }

    #[test]
    fn state_guard() {
        let mut inst = two_class();
        inst.periods = 12;
        let mut s = DpSolver::with_limit(inst, 50).unwrap();
        assert_eq!(s.solve(), Err(Error::StateSpaceExceeded { bound: 50 }));
    }

    #[test]
    fn invalid_instances() {
        let mut inst = two_class();
        inst.classes[0].arrival_prob = 0.5;
        assert!(DpInstance::validate(&inst).is_err());
        let mut inst = two_class();
        inst.classes[1].windows[0].prob = 0.2;
        assert!(inst.validate().is_err());
        let mut s = DpSolver::new(two_class()).unwrap();
        assert!(s.value(2, &[2, 2]).is_err());
        assert!(s.value(2, &[2, 3, 2]).is_err());
    }

    #[test]
    fn thinning() {
        let p = thinned_probabilities(&[1.0, 3.0], 0.5).unwrap();
        assert!((p[0] - 0.5 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.5 / 3.0).abs() < 1e-15);
        assert!(p.iter().sum::<f64>() < 1.0);
    }
}
