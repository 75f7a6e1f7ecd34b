//! Merged reservation/service distributions and pre-arrival rates.
//!
//! Superposing the class streams gives one Poisson stream of rate
//! `lambda = sum_k lambda_k` whose customers carry a `(d, s)` drawn from the
//! rate-weighted joint pmf. As seen by an arrival at time 0 in steady state,
//! customers that arrived earlier with service `s` and start slot
//! `(j - 1, j]` form independent Poisson processes; indexing them by the slot
//! `(i, i + 1]` in which they depart (`i = j + s - 1`), their rate is
//!
//! ```text
//! lambda_i^s = kappa_s * lambda * (1 - sum_{l = 0}^{i - s} gamma_l^s)
//! ```
//!
//! where `kappa_s = P(S = s)` and `gamma_l^s = P(D = l | S = s)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{ClassSpec, PMF_TOLERANCE};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MergedDistribution {
    total_rate: f64,
    /// Largest delay `u`.
    max_delay: u32,
    /// Largest duration `v`.
    max_duration: u32,
    /// Row-major `(u + 1) x v`: `joint[d * v + (s - 1)]`.
    joint: Vec<f64>,
}

impl MergedDistribution {
    /// Builds directly from a joint pmf over `(d, s)` and a total rate.
    pub fn from_joint(
        total_rate: f64,
        entries: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<Self> {
        let entries: Vec<_> = entries.into_iter().collect();
        if !(total_rate.is_finite() && total_rate > 0.0) {
            return Err(Error::NoArrivals);
        }
        let max_delay = entries.iter().map(|e| e.0).max().unwrap_or(0);
        let max_duration = entries.iter().map(|e| e.1).max().unwrap_or(1);
        let mut out = Self {
            total_rate,
            max_delay,
            max_duration,
            joint: vec![0.0; (max_delay as usize + 1) * max_duration as usize],
        };
        for (d, s, p) in entries {
            if s == 0 || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidPmf {
                    class_id: 0,
                    reason: format!("bad merged entry ({d}, {s}, {p})"),
                });
            }
            let idx = out.index(d, s);
            out.joint[idx] += p;
        }
        let total: f64 = out.joint.iter().sum();
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::InvalidPmf {
                class_id: 0,
                reason: format!("merged probabilities sum to {total}"),
            });
        }
        out.trim();
        Ok(out)
    }

    /// Same joint pmf at another total rate.
    pub fn with_total_rate(&self, total_rate: f64) -> Result<Self> {
        if !(total_rate.is_finite() && total_rate > 0.0) {
            return Err(Error::NoArrivals);
        }
        Ok(Self {
            total_rate,
            ..self.clone()
        })
    }

    /// Drops trailing delays/durations that carry no mass.
    fn trim(&mut self) {
        let v = self.max_duration as usize;
        let u = (0..=self.max_delay as usize)
            .rev()
            .find(|&d| self.joint[d * v..(d + 1) * v].iter().any(|&p| p > 0.0))
            .unwrap_or(0);
        let new_v = (1..=v)
            .rev()
            .find(|&s| (0..=u).any(|d| self.joint[d * v + s - 1] > 0.0))
            .unwrap_or(1);
        if u as u32 == self.max_delay && new_v == v {
            return;
        }
        let mut joint = vec![0.0; (u + 1) * new_v];
        for d in 0..=u {
            joint[d * new_v..(d + 1) * new_v].copy_from_slice(&self.joint[d * v..d * v + new_v]);
        }
        self.joint = joint;
        self.max_delay = u as u32;
        self.max_duration = new_v as u32;
    }

    fn index(&self, d: u32, s: u32) -> usize {
        d as usize * self.max_duration as usize + (s as usize - 1)
    }

    /// `lambda`.
    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    /// `u`.
    pub fn max_delay(&self) -> u32 {
        self.max_delay
    }

    /// `v`.
    pub fn max_duration(&self) -> u32 {
        self.max_duration
    }

    /// `f_{D,S}(d, s)`; zero outside the support box.
    pub fn joint(&self, d: u32, s: u32) -> f64 {
        if d > self.max_delay || s == 0 || s > self.max_duration {
            return 0.0;
        }
        self.joint[self.index(d, s)]
    }

    /// `(d, s)` pairs with positive mass, ordered by `d` then `s`.
    pub fn support(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..=self.max_delay).flat_map(move |d| {
            (1..=self.max_duration)
                .filter(move |&s| self.joint(d, s) > 0.0)
                .map(move |s| (d, s))
        })
    }

    /// `gamma_d = f_D(d)`.
    pub fn delay_marginal(&self, d: u32) -> f64 {
        (1..=self.max_duration).map(|s| self.joint(d, s)).sum()
    }

    /// `kappa_s = f_S(s)`.
    pub fn service_marginal(&self, s: u32) -> f64 {
        (0..=self.max_delay).map(|d| self.joint(d, s)).sum()
    }

    /// `gamma_d^s = P(D = d | S = s)`. Undefined when `kappa_s = 0`.
    pub fn conditional_delay(&self, d: u32, s: u32) -> Result<f64> {
        let kappa = self.service_marginal(s);
        if kappa <= 0.0 {
            return Err(Error::UndefinedConditional { s });
        }
        Ok(self.joint(d, s) / kappa)
    }

    /// Mean service time `mu`.
    pub fn mean_service(&self) -> f64 {
        (1..=self.max_duration)
            .map(|s| s as f64 * self.service_marginal(s))
            .sum()
    }

    /// `rho = lambda * sum_s s kappa_s`.
    pub fn traffic_intensity(&self) -> f64 {
        self.total_rate * self.mean_service()
    }

    /// Smallest delay with positive mass.
    pub fn min_delay(&self) -> u32 {
        (0..=self.max_delay)
            .find(|&d| self.delay_marginal(d) > 0.0)
            .unwrap_or(0)
    }

    /// `lambda_d^s`: rate of the set-`s` pre-arrival process departing over
    /// `(d, d + 1]`.
    pub fn pre_arrival_rate(&self, d: u32, s: u32) -> Result<f64> {
        if s == 0 || s > self.max_duration {
            return Err(Error::OutOfSupport { d, s });
        }
        let kappa = self.service_marginal(s);
        if kappa <= 0.0 {
            return Err(Error::UndefinedConditional { s });
        }
        let base = kappa * self.total_rate;
        if d < s {
            return Ok(base);
        }
        let upto = d - s;
        if upto >= self.max_delay {
            return Ok(0.0);
        }
        let consumed: f64 = (0..=upto).map(|l| self.joint(l, s)).sum::<f64>() / kappa;
        Ok((base * (1.0 - consumed)).max(0.0))
    }

    /// Piecewise-constant rate of pre-arrivals (start times of customers
    /// already booked) as seen from time 0.
    pub fn prearrival_profile(&self) -> PrearrivalProfile {
        let services: Vec<u32> = (1..=self.max_duration)
            .filter(|&s| self.service_marginal(s) > 0.0)
            .collect();
        let mut pieces = Vec::with_capacity(self.max_delay as usize + 2);
        let per_service: Vec<(u32, f64)> = services
            .iter()
            .map(|&s| (s, self.service_marginal(s) * self.total_rate))
            .collect();
        pieces.push(ProfilePiece {
            start: f64::NEG_INFINITY,
            end: 0.0,
            rate: self.total_rate,
            per_service,
        });
        // Starts in (j - 1, j] for set s depart over (j + s - 1, j + s].
        for j in 1..=self.max_delay + 1 {
            let per_service: Vec<(u32, f64)> = services
                .iter()
                .map(|&s| {
                    let r = self
                        .pre_arrival_rate(j + s - 1, s)
                        .expect("service with positive mass");
                    (s, r)
                })
                .collect();
            let rate = per_service.iter().map(|p| p.1).sum();
            let end = if j == self.max_delay + 1 {
                f64::INFINITY
            } else {
                j as f64
            };
            pieces.push(ProfilePiece {
                start: (j - 1) as f64,
                end,
                rate,
                per_service,
            });
        }
        PrearrivalProfile { pieces }
    }
}

/// Merges class streams into one, weighting each class pmf by `lambda_k / lambda`.
pub fn merge_classes(classes: &[ClassSpec]) -> Result<MergedDistribution> {
    let total: f64 = classes.iter().map(ClassSpec::arrival_rate).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::NoArrivals);
    }
    let entries = classes.iter().flat_map(|c| {
        let w = c.arrival_rate() / total;
        c.pmf()
            .iter()
            .map(move |m| (m.delay, m.duration, w * m.prob))
    });
    MergedDistribution::from_joint(total, entries)
}

/// One constant piece `(start, end]` of the pre-arrival profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePiece {
    pub start: f64,
    pub end: f64,
    pub rate: f64,
    /// Rate contributed by each service time with positive mass.
    pub per_service: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrearrivalProfile {
    pub pieces: Vec<ProfilePiece>,
}

impl PrearrivalProfile {
    /// Rate at relative time `r`.
    pub fn rate_at(&self, r: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| p.start < r && r <= p.end)
            .map_or(0.0, |p| p.rate)
    }
}
