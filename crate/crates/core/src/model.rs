//! Customer classes, requests and system configuration.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};

use crate::{Error, Result};

/// Tolerance for pmf normalization checks.
pub const PMF_TOLERANCE: f64 = 1e-12;

/// One `(delay, duration, probability)` entry of a class's joint pmf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeMass {
    pub delay: u32,
    pub duration: u32,
    pub prob: f64,
}

/// A customer class: Poisson rate, reward per unit of service time and the
/// joint pmf of (reservation delay, service duration).
#[derive(Debug, Clone)]
pub struct ClassSpec {
    class_id: u32,
    arrival_rate: f64,
    reward_rate: f64,
    pmf: Vec<TypeMass>,
    sampler: WeightedIndex<f64>,
}

impl PartialEq for ClassSpec {
    fn eq(&self, other: &Self) -> bool {
        self.class_id == other.class_id
            && self.arrival_rate == other.arrival_rate
            && self.reward_rate == other.reward_rate
            && self.pmf == other.pmf
    }
}

impl ClassSpec {
    /// Builds a class from `(d, s, p)` triples. Entries with equal `(d, s)` are
    /// merged and zero-probability entries dropped.
    pub fn new(
        class_id: u32,
        arrival_rate: f64,
        reward_rate: f64,
        entries: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<Self> {
        if !(arrival_rate.is_finite() && arrival_rate >= 0.0) {
            return Err(Error::param(
                "arrival_rate",
                format!("{arrival_rate} is not >= 0"),
            ));
        }
        if !(reward_rate.is_finite() && reward_rate >= 0.0) {
            return Err(Error::param(
                "reward_rate",
                format!("{reward_rate} is not >= 0"),
            ));
        }
        let bad = |reason: alloc::string::String| Error::InvalidPmf { class_id, reason };
        let mut pmf: Vec<TypeMass> = Vec::new();
        for (delay, duration, prob) in entries {
            if !(0.0..=1.0).contains(&prob) {
                return Err(bad(format!("probability {prob} outside [0, 1]")));
            }
            if duration == 0 {
                return Err(bad(format!("duration must be >= 1 (entry d = {delay})")));
            }
            if prob == 0.0 {
                continue;
            }
            match pmf
                .iter_mut()
                .find(|m| m.delay == delay && m.duration == duration)
            {
                Some(m) => m.prob += prob,
                None => pmf.push(TypeMass {
                    delay,
                    duration,
                    prob,
                }),
            }
        }
        let total: f64 = pmf.iter().map(|m| m.prob).sum();
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(bad(format!("probabilities sum to {total}, not 1")));
        }
        pmf.sort_by_key(|m| (m.delay, m.duration));
        let sampler = WeightedIndex::new(pmf.iter().map(|m| m.prob))
            .map_err(|e| bad(format!("cannot build sampler: {e}")))?;
        Ok(Self {
            class_id,
            arrival_rate,
            reward_rate,
            pmf,
            sampler,
        })
    }

    pub fn class_id(&self) -> u32 {
        self.class_id
    }

    pub fn arrival_rate(&self) -> f64 {
        self.arrival_rate
    }

    pub fn reward_rate(&self) -> f64 {
        self.reward_rate
    }

    pub fn pmf(&self) -> &[TypeMass] {
        &self.pmf
    }

    /// Copy of this class with another arrival rate.
    pub fn with_arrival_rate(&self, arrival_rate: f64) -> Result<Self> {
        Self::new(
            self.class_id,
            arrival_rate,
            self.reward_rate,
            self.pmf.iter().map(|m| (m.delay, m.duration, m.prob)),
        )
    }

    /// `P(D = d, S = s)`.
    pub fn prob(&self, delay: u32, duration: u32) -> f64 {
        self.pmf
            .iter()
            .find(|m| m.delay == delay && m.duration == duration)
            .map_or(0.0, |m| m.prob)
    }

    /// Arrival rate of the `(d, s)` type: `lambda_k * P(D = d, S = s)`.
    pub fn type_rate(&self, delay: u32, duration: u32) -> f64 {
        self.arrival_rate * self.prob(delay, duration)
    }

    /// Largest delay in the support (`u_k`).
    pub fn max_delay(&self) -> u32 {
        self.pmf.iter().map(|m| m.delay).max().unwrap_or(0)
    }

    /// Largest duration in the support (`v_k`).
    pub fn max_duration(&self) -> u32 {
        self.pmf.iter().map(|m| m.duration).max().unwrap_or(1)
    }

    /// Mean service time.
    pub fn mean_service(&self) -> f64 {
        self.pmf.iter().map(|m| m.prob * m.duration as f64).sum()
    }

    /// Offered load `lambda_k * mu_k`.
    pub fn offered_load(&self) -> f64 {
        self.arrival_rate * self.mean_service()
    }

    pub fn sample_type<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, u32) {
        let m = self.pmf[self.sampler.sample(rng)];
        (m.delay, m.duration)
    }
}

/// An arriving customer asking for `[arrival_time + delay, arrival_time + delay + duration)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Request {
    pub class_id: u32,
    pub arrival_time: f64,
    pub delay: u32,
    pub duration: u32,
    pub sequence_number: u64,
}

impl Request {
    pub fn start(&self) -> f64 {
        self.arrival_time + self.delay as f64
    }

    pub fn end(&self) -> f64 {
        self.start() + self.duration as f64
    }
}

/// Non-fatal configuration findings.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// `epsilon` is not below `min_k lambda_k mu_k / C`.
    EpsilonAboveBound { epsilon: f64, bound: f64 },
    /// Capacity zero: every request is blocked.
    ZeroCapacity,
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Warning::EpsilonAboveBound { epsilon, bound } => write!(
                f,
                "epsilon {epsilon} is not below min_k(lambda_k mu_k / C) = {bound}"
            ),
            Warning::ZeroCapacity => write!(f, "capacity is 0; every request will be blocked"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub capacity: u32,
    pub classes: Vec<ClassSpec>,
    pub epsilon: f64,
    pub horizon: f64,
    pub warmup_fraction: f64,
}

impl SystemConfig {
    pub const DEFAULT_WARMUP_FRACTION: f64 = 0.2;

    /// Checks hard invariants and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        if self.classes.is_empty() {
            return Err(Error::param("classes", "at least one class is required"));
        }
        let mut ids: Vec<u32> = self.classes.iter().map(|c| c.class_id()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("classes", "class ids must be unique"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::param(
                "epsilon",
                format!("{} not in (0, 1)", self.epsilon),
            ));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::param(
                "horizon",
                format!("{} is not > 0", self.horizon),
            ));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::param(
                "warmup_fraction",
                format!("{} not in [0, 1)", self.warmup_fraction),
            ));
        }
        if !self.traffic_intensity().is_finite() {
            return Err(Error::param("classes", "traffic intensity is not finite"));
        }
        let mut warnings = Vec::new();
        if self.capacity == 0 {
            warnings.push(Warning::ZeroCapacity);
        } else {
            let bound = self
                .classes
                .iter()
                .map(|c| c.offered_load() / self.capacity as f64)
                .fold(f64::INFINITY, f64::min);
            if self.epsilon >= bound {
                warnings.push(Warning::EpsilonAboveBound {
                    epsilon: self.epsilon,
                    bound,
                });
            }
        }
        Ok(warnings)
    }

    /// `rho = sum_k lambda_k mu_k`.
    pub fn traffic_intensity(&self) -> f64 {
        self.classes.iter().map(ClassSpec::offered_load).sum()
    }

    pub fn total_arrival_rate(&self) -> f64 {
        self.classes.iter().map(ClassSpec::arrival_rate).sum()
    }

    /// `u + v` over all classes: how far back the booking profile remembers.
    pub fn memory_span(&self) -> f64 {
        let u = self
            .classes
            .iter()
            .map(ClassSpec::max_delay)
            .max()
            .unwrap_or(0);
        let v = self
            .classes
            .iter()
            .map(ClassSpec::max_duration)
            .max()
            .unwrap_or(1);
        (u + v) as f64
    }

    /// Warm-up length: `max(warmup_fraction * horizon, 5 (u + v))`.
    pub fn warmup(&self) -> Result<f64> {
        let w = (self.warmup_fraction * self.horizon).max(5.0 * self.memory_span());
        if w >= self.horizon {
            return Err(Error::param(
                "horizon",
                format!("horizon {} does not exceed the warm-up {w}", self.horizon),
            ));
        }
        Ok(w)
    }

    pub fn class(&self, class_id: u32) -> Option<&ClassSpec> {
        self.classes.iter().find(|c| c.class_id() == class_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn pmf_must_sum_to_one() {
        assert!(ClassSpec::new(1, 1.0, 1.0, [(0, 1, 0.5), (1, 1, 0.4)]).is_err());
        assert!(ClassSpec::new(1, 1.0, 1.0, [(0, 1, 0.5), (1, 1, 0.5)]).is_ok());
        assert!(ClassSpec::new(1, 1.0, 1.0, [(0, 0, 1.0)]).is_err());
        assert!(ClassSpec::new(1, 1.0, 1.0, [(0, 1, 1.5)]).is_err());
        assert!(ClassSpec::new(1, -1.0, 1.0, [(0, 1, 1.0)]).is_err());
    }

    #[test]
    fn derived_quantities() {
        let c = ClassSpec::new(3, 2.0, 5.0, [(0, 1, 0.25), (2, 3, 0.75)]).unwrap();
        assert_eq!(c.max_delay(), 2);
        assert_eq!(c.max_duration(), 3);
        assert_eq!(c.mean_service(), 2.5);
        assert_eq!(c.offered_load(), 5.0);
        assert_eq!(c.type_rate(2, 3), 1.5);
        assert_eq!(c.type_rate(1, 1), 0.0);
    }

    #[test]
    fn epsilon_bound_warns() {
        let c = ClassSpec::new(1, 1.0, 1.0, [(0, 1, 1.0)]).unwrap();
        let cfg = SystemConfig {
            capacity: 10,
            classes: vec![c],
            epsilon: 0.2,
            horizon: 100.0,
            warmup_fraction: 0.2,
        };
        let w = cfg.validate().unwrap();
        assert!(matches!(w[0], Warning::EpsilonAboveBound { .. }));
        let ok = SystemConfig {
            epsilon: 0.05,
            ..cfg.clone()
        };
        assert!(ok.validate().unwrap().is_empty());
        assert!(SystemConfig {
            epsilon: 1.0,
            ..cfg
        }
        .validate()
        .is_err());
    }

    #[test]
    fn warmup_respects_memory_span() {
        let c = ClassSpec::new(1, 1.0, 1.0, [(3, 2, 1.0)]).unwrap();
        let cfg = SystemConfig {
            capacity: 1,
            classes: vec![c],
            epsilon: 0.01,
            horizon: 100.0,
            warmup_fraction: 0.1,
        };
        assert_eq!(cfg.warmup().unwrap(), 25.0);
        let short = SystemConfig {
            horizon: 20.0,
            ..cfg
        };
        assert!(short.warmup().is_err());
    }
}
