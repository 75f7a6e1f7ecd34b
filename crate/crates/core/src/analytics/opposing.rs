//! Maximum of two Poisson counting processes running towards each other.
//!
//! Over `r in [0, 1]`, `X = max_r { D(1 - r) + F(r) }` where `D` is the mirror
//! image of a departure process (customers still present at `r`) and `F`
//! counts pre-arrivals in `(0, r]`. The inner function only jumps up at
//! pre-arrival points, so the maximum is attained at `r = 0` or at one of them.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::Poisson;

use super::push_poisson_points;
use crate::math;
use crate::rng::{self, substream};
use crate::stats::{Estimate, Tally};
use crate::{Error, Result};

/// Upper limit on DP state updates for the exact evaluator.
pub const EXACT_WORK_LIMIT: f64 = 4e9;

/// Poisson tail mass the exact evaluator may ignore.
pub const EXACT_TAIL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpposingProcessSpec {
    /// Rate of the mirrored departure process.
    pub backward_rate: f64,
    /// Rate of the forward pre-arrival process.
    pub forward_rate: f64,
    /// Blocking threshold `C`.
    pub threshold: u32,
}

impl OpposingProcessSpec {
    pub fn new(backward_rate: f64, forward_rate: f64, threshold: u32) -> Result<Self> {
        if !(backward_rate.is_finite() && backward_rate >= 0.0) {
            return Err(Error::param("backward_rate", "must be finite and >= 0"));
        }
        if !(forward_rate.is_finite() && forward_rate >= 0.0) {
            return Err(Error::param("forward_rate", "must be finite and >= 0"));
        }
        if threshold == 0 {
            return Err(Error::param("threshold", "must be >= 1"));
        }
        Ok(Self {
            backward_rate,
            forward_rate,
            threshold,
        })
    }

    pub fn total_rate(&self) -> f64 {
        self.backward_rate + self.forward_rate
    }

    /// Probability that a merged point is a pre-arrival.
    pub fn up_prob(&self) -> f64 {
        let total = self.total_rate();
        if total > 0.0 {
            self.forward_rate / total
        } else {
            0.0
        }
    }
}

/// Evaluates the opposing maximum for explicit point sets on `(0, 1]`.
///
/// Both slices are sorted in place. A departure at `x` still counts at every
/// `r < x`; a pre-arrival at `x` counts from `r = x` on.
pub fn opposing_max_direct(departures: &mut [f64], arrivals: &mut [f64]) -> u32 {
    departures.sort_unstable_by(f64::total_cmp);
    arrivals.sort_unstable_by(f64::total_cmp);
    let n_dep = departures.len();
    let mut best = n_dep;
    for (i, &x) in arrivals.iter().enumerate() {
        let arrived = i + 1 + arrivals[i + 1..].iter().take_while(|&&y| y <= x).count();
        let still_present = n_dep - departures.partition_point(|&y| y <= x);
        best = best.max(still_present + arrived);
    }
    best as u32
}

/// Exact `P(X >= C)` by conditioning on the number of merged points.
///
/// For each `n <= n_trunc` the walk is advanced one step and the probability
/// that `G_n + M_n >= C` is weighted by the Poisson pmf of `n`. The state is
/// `(G + M, M - level)`, both below `C` until absorbed.
pub fn opposing_max_exact(spec: &OpposingProcessSpec, n_trunc: usize) -> Result<f64> {
    let total = spec.total_rate();
    let c = spec.threshold as usize;
    if total == 0.0 {
        return Ok(0.0);
    }
    let tail = math::poisson_upper_tail(total, n_trunc);
    if tail >= EXACT_TAIL_TOLERANCE {
        return Err(Error::TruncationTooShort { n_trunc, tail });
    }
    let work = n_trunc as f64 * (c * (c + 1) / 2) as f64;
    if work > EXACT_WORK_LIMIT {
        return Err(Error::ExactInfeasible {
            work,
            limit: EXACT_WORK_LIMIT,
        });
    }
    let p = spec.up_prob();
    let q = 1.0 - p;
    // mass[x * c + e]: current max-occupancy x = G + M, gap e = M - level.
    let mut mass = vec![0.0f64; c * c];
    let mut next = vec![0.0f64; c * c];
    mass[0] = 1.0;
    let mut absorbed = 0.0f64;
    let mut result = 0.0f64;
    let mut pmf = math::poisson_pmf(total, 0);
    for n in 0..=n_trunc {
        if n > 0 {
            pmf = math::poisson_pmf(total, n);
        }
        result += pmf * absorbed;
        if n == n_trunc {
            break;
        }
        next.iter_mut().for_each(|m| *m = 0.0);
        for x in 0..c {
            for e in 0..=x {
                let m = mass[x * c + e];
                if m == 0.0 {
                    continue;
                }
                // Up step: closes the gap, or raises the max.
                if e > 0 {
                    next[x * c + e - 1] += m * p;
                } else if x + 1 < c {
                    next[(x + 1) * c] += m * p;
                } else {
                    absorbed += m * p;
                }
                // Down step: one more departure counted, gap widens.
                if x + 1 < c {
                    next[(x + 1) * c + e + 1] += m * q;
                } else {
                    absorbed += m * q;
                }
            }
        }
        core::mem::swap(&mut mass, &mut next);
    }
    Ok(result.clamp(0.0, 1.0))
}

/// [`opposing_max_exact`] with the smallest truncation meeting the tail bound.
pub fn opposing_max_exact_auto(spec: &OpposingProcessSpec) -> Result<f64> {
    let n = math::poisson_truncation(spec.total_rate(), EXACT_TAIL_TOLERANCE);
    opposing_max_exact(spec, n)
}

/// Monte Carlo tally for one chunk of samples.
pub fn opposing_max_chunk(
    spec: &OpposingProcessSpec,
    seed: u64,
    chunk_index: u64,
    len: u64,
) -> Tally {
    let mut rng = substream(seed, &[chunk_index]);
    let back = (spec.backward_rate > 0.0).then(|| Poisson::new(spec.backward_rate).unwrap());
    let fwd = (spec.forward_rate > 0.0).then(|| Poisson::new(spec.forward_rate).unwrap());
    let mut departures = Vec::new();
    let mut arrivals = Vec::new();
    let mut tally = Tally::default();
    for _ in 0..len {
        departures.clear();
        arrivals.clear();
        push_poisson_points(spec.backward_rate, back.as_ref(), &mut rng, &mut departures);
        push_poisson_points(spec.forward_rate, fwd.as_ref(), &mut rng, &mut arrivals);
        let x = opposing_max_direct(&mut departures, &mut arrivals);
        tally.record(x >= spec.threshold);
    }
    tally
}

/// Monte Carlo estimate of `P(X >= C)` with binomial standard error.
pub fn opposing_max_mc(spec: &OpposingProcessSpec, n_samples: u64, seed: u64) -> Result<Estimate> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be >= 1"));
    }
    let mut tally = Tally::default();
    for (i, len) in rng::chunks(n_samples) {
        tally.merge(opposing_max_chunk(spec, seed, i, len));
    }
    Ok(tally.estimate().expect("at least one sample"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::walk::walk_statistics;
    use crate::math::{poisson_pmf, poisson_tail_ge, poisson_upper_tail};

    fn spec(b: f64, f: f64, c: u32) -> OpposingProcessSpec {
        OpposingProcessSpec::new(b, f, c).unwrap()
    }

    /// Enumerates every up/down configuration of `n` points placed at
    /// `k / (n + 1)` and evaluates the opposing maximum directly.
    fn enumerate_conditional(n: usize, p: f64, c: u32) -> f64 {
        let mut prob = 0.0;
        for mask in 0u32..(1 << n) {
            let mut dep = Vec::new();
            let mut arr = Vec::new();
            let mut ups = 0;
            for k in 0..n {
                let x = (k + 1) as f64 / (n + 1) as f64;
                if mask >> k & 1 == 1 {
                    arr.push(x);
                    ups += 1;
                } else {
                    dep.push(x);
                }
            }
            if opposing_max_direct(&mut dep, &mut arr) >= c {
                prob += p.powi(ups) * (1.0 - p).powi(n as i32 - ups);
            }
        }
        prob
    }

    #[test]
    fn decomposition_identity_all_configurations() {
        for n in 0..=12usize {
            for mask in 0u32..(1 << n) {
                let steps: Vec<bool> = (0..n).map(|k| mask >> k & 1 == 1).collect();
                let mut dep = Vec::new();
                let mut arr = Vec::new();
                for (k, &up) in steps.iter().enumerate() {
                    let x = (k + 1) as f64 / (n + 1) as f64;
                    if up {
                        arr.push(x)
                    } else {
                        dep.push(x)
                    }
                }
                let direct = opposing_max_direct(&mut dep, &mut arr);
                let w = walk_statistics(&steps);
                assert_eq!(direct, w.down_steps + w.max_level, "n={n} mask={mask:b}");
            }
        }
    }

    #[test]
    fn no_forward_process_is_poisson_tail() {
        for lambda in [0.3, 2.0, 7.5] {
            let e = opposing_max_exact_auto(&spec(lambda, 0.0, 1)).unwrap();
            assert!((e - (1.0 - (-lambda).exp())).abs() < 1e-9);
            for c in [1, 3, 9] {
                let e = opposing_max_exact_auto(&spec(lambda, 0.0, c)).unwrap();
                assert!((e - poisson_tail_ge(lambda, c)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exact_matches_enumeration_small_case() {
        let s = spec(2.0, 1.0, 3);
        let p = s.up_prob();
        let brute: f64 = (0..=12)
            .map(|n| poisson_pmf(3.0, n) * enumerate_conditional(n, p, 3))
            .sum();
        let tail = poisson_upper_tail(3.0, 12);
        let exact = opposing_max_exact_auto(&s).unwrap();
        assert!((exact - brute).abs() <= tail + 1e-12, "{exact} vs {brute}");
        assert!(exact > brute - 1e-12);
    }

    #[test]
    fn exact_rejects_short_truncation_and_huge_work() {
        assert!(matches!(
            opposing_max_exact(&spec(50.0, 10.0, 5), 20),
            Err(Error::TruncationTooShort { .. })
        ));
        assert!(matches!(
            opposing_max_exact_auto(&spec(1e6, 1e6, 1_000_000)),
            Err(Error::ExactInfeasible { .. })
        ));
    }

    #[test]
    fn exact_at_least_backward_tail() {
        for (b, f, c) in [
            (5.0, 2.0, 5),
            (20.0, 10.0, 20),
            (3.0, 2.9, 2),
            (10.0, 0.0, 12),
        ] {
            let e = opposing_max_exact_auto(&spec(b, f, c)).unwrap();
            assert!(e + 1e-12 >= poisson_tail_ge(b, c));
        }
    }

    #[test]
    fn exact_monotone_in_rates() {
        let base = opposing_max_exact_auto(&spec(10.0, 4.0, 11)).unwrap();
        let more_back = opposing_max_exact_auto(&spec(11.0, 4.0, 11)).unwrap();
        let more_fwd = opposing_max_exact_auto(&spec(10.0, 5.0, 11)).unwrap();
        assert!(more_back >= base && more_fwd >= base);
    }

    #[test]
    fn mc_agrees_with_exact() {
        for (i, (b, f, c)) in [
            (5.0, 2.0, 5),
            (20.0, 10.0, 21),
            (8.0, 7.0, 6),
            (3.0, 0.0, 3),
        ]
        .into_iter()
        .enumerate()
        {
            let s = spec(b, f, c);
            let exact = opposing_max_exact_auto(&s).unwrap();
            let mc = opposing_max_mc(&s, 40_000, 100 + i as u64).unwrap();
            assert!(mc.agrees_with(exact, 4.0), "{s:?}: {mc:?} vs {exact}");
        }
    }

    #[test]
    fn mc_is_deterministic() {
        let s = spec(6.0, 3.0, 7);
        assert_eq!(
            opposing_max_mc(&s, 5000, 3).unwrap(),
            opposing_max_mc(&s, 5000, 3).unwrap()
        );
        assert!(opposing_max_mc(&s, 0, 3).is_err());
    }

    #[test]
    fn direct_handles_empty_sets() {
        assert_eq!(opposing_max_direct(&mut [], &mut []), 0);
        assert_eq!(opposing_max_direct(&mut [0.3, 0.9], &mut []), 2);
        assert_eq!(opposing_max_direct(&mut [], &mut [0.1, 0.2]), 2);
        // Departure at 0.5 leaves before the pre-arrival at 0.6 shows up.
        assert_eq!(opposing_max_direct(&mut [0.5], &mut [0.6]), 1);
        assert_eq!(opposing_max_direct(&mut [0.6], &mut [0.5]), 2);
    }
}
