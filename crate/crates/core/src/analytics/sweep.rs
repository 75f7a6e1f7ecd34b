//! High-volume sweeps of `P_d^s` as the arrival rate grows.

use alloc::vec::Vec;

use super::occupancy::window_blocking_chunk;
use crate::distributions::MergedDistribution;
use crate::math;
use crate::rng;
use crate::stats::{Estimate, Tally};
use crate::{Error, Result};

/// How capacity scales with the offered load `rho = lambda * mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `C = ceil(rho)`.
    Critical,
    /// `C = ceil((1 + epsilon) rho)`.
    Padded { epsilon: f64 },
}

impl Regime {
    pub fn capacity_for(&self, rho: f64) -> u32 {
        let target = match *self {
            Regime::Critical => rho,
            Regime::Padded { epsilon } => (1.0 + epsilon) * rho,
        };
        math::ceil_tol(target).max(0.0) as u32
    }

    fn validate(&self) -> Result<()> {
        if let Regime::Padded { epsilon } = *self {
            if !(epsilon.is_finite() && epsilon >= 0.0) {
                return Err(Error::param("epsilon", "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub d: u32,
    pub s: u32,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub capacity: u32,
    pub cells: Vec<SweepCell>,
}

/// One `(lambda, d, s)` estimation job of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepJob {
    pub row: usize,
    pub lambda: f64,
    pub capacity: u32,
    pub d: u32,
    pub s: u32,
    pub dist: MergedDistribution,
    /// Seed of the job's chunk streams.
    pub seed: u64,
}

impl SweepJob {
    /// Tally for one chunk of this job's samples.
    pub fn run_chunk(&self, chunk_index: u64, chunk_len: u64) -> Result<Tally> {
        window_blocking_chunk(
            &self.dist,
            self.d,
            self.s,
            self.capacity,
            self.seed,
            chunk_index,
            chunk_len,
        )
    }
}

/// Lists the jobs of a sweep in row order, cells in `(d, s)` order.
pub fn sweep_jobs(
    regime: Regime,
    base: &MergedDistribution,
    lambda_grid: &[f64],
    seed: u64,
) -> Result<Vec<SweepJob>> {
    regime.validate()?;
    if lambda_grid.is_empty() {
        return Err(Error::param("lambda_grid", "must be nonempty"));
    }
    if lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("lambda_grid", "must be strictly increasing"));
    }
    let support: Vec<(u32, u32)> = base.support().collect();
    let mut jobs = Vec::new();
    for (row, &lambda) in lambda_grid.iter().enumerate() {
        let dist = base.with_total_rate(lambda)?;
        let capacity = regime.capacity_for(dist.traffic_intensity());
        for &(d, s) in &support {
            jobs.push(SweepJob {
                row,
                lambda,
                capacity,
                d,
                s,
                dist: dist.clone(),
                seed: rng::derive_seed(seed, &[row as u64, d as u64, s as u64]),
            });
        }
    }
    Ok(jobs)
}

/// Groups per-job tallies (in [`sweep_jobs`] order) into rows.
pub fn assemble_rows(jobs: &[SweepJob], tallies: &[Tally]) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = Vec::new();
    for (job, tally) in jobs.iter().zip(tallies) {
        if rows.len() <= job.row {
            rows.push(SweepRow {
                lambda: job.lambda,
                capacity: job.capacity,
                cells: Vec::new(),
            });
        }
        if let Some(estimate) = tally.estimate() {
            rows[job.row].cells.push(SweepCell {
                d: job.d,
                s: job.s,
                estimate,
            });
        }
    }
    rows
}

/// Estimates every `P_d^s` of the support at each `lambda` of the grid.
pub fn asymptotic_sweep(
    regime: Regime,
    base: &MergedDistribution,
    lambda_grid: &[f64],
    n_samples: u64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be >= 1"));
    }
    let jobs = sweep_jobs(regime, base, lambda_grid, seed)?;
    let mut tallies = Vec::with_capacity(jobs.len());
    for job in &jobs {
        let mut tally = Tally::default();
        for (i, n) in rng::chunks(n_samples) {
            tally.merge(job.run_chunk(i, n)?);
        }
        tallies.push(tally);
    }
    Ok(assemble_rows(&jobs, &tallies))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(row: &SweepRow, d: u32, s: u32) -> Estimate {
        row.cells
            .iter()
            .find(|c| c.d == d && c.s == s)
            .unwrap()
            .estimate
    }

    #[test]
    fn capacity_rounding() {
        assert_eq!(Regime::Critical.capacity_for(50.0), 50);
        assert_eq!(Regime::Critical.capacity_for(50.2), 51);
        assert_eq!(Regime::Padded { epsilon: 0.1 }.capacity_for(400.0), 440);
        assert_eq!(Regime::Padded { epsilon: 0.1 }.capacity_for(7.0), 8);
    }

    #[test]
    fn single_lambda_gives_single_row() {
        let base = MergedDistribution::from_joint(1.0, [(0, 1, 0.5), (1, 1, 0.5)]).unwrap();
        let rows = asymptotic_sweep(Regime::Critical, &base, &[30.0], 2000, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].capacity, 30);
        assert_eq!(rows[0].cells.len(), 2);
    }

    #[test]
    fn grid_must_increase() {
        let base = MergedDistribution::from_joint(1.0, [(0, 1, 1.0)]).unwrap();
        assert!(asymptotic_sweep(Regime::Critical, &base, &[], 10, 1).is_err());
        assert!(asymptotic_sweep(Regime::Critical, &base, &[5.0, 5.0], 10, 1).is_err());
    }

    #[test]
    fn no_booking_ahead_critical_sits_near_half() {
        // D = 0, S = 1, C = lambda: P(Poisson(lambda) >= lambda) -> 1/2.
        let base = MergedDistribution::from_joint(1.0, [(0, 1, 1.0)]).unwrap();
        let rows = asymptotic_sweep(Regime::Critical, &base, &[100.0, 400.0], 20_000, 3).unwrap();
        for row in &rows {
            let e = cell(row, 0, 1);
            let exact = math::poisson_tail_ge(row.lambda, row.capacity);
            assert!(e.agrees_with(exact, 4.0), "{e:?} vs {exact}");
        }
        assert!((cell(&rows[1], 0, 1).value - 0.5).abs() < 0.05);
    }

    #[test]
    fn padded_regime_decreases() {
        // Two-point delay, unit service: P_0 is an opposing maximum with rates
        // lambda and lambda / 2, P_1 a Poisson tail at rate lambda / 2.
        let base = MergedDistribution::from_joint(1.0, [(0, 1, 0.5), (1, 1, 0.5)]).unwrap();
        let grid = [50.0, 200.0, 800.0];
        let rows =
            asymptotic_sweep(Regime::Padded { epsilon: 0.1 }, &base, &grid, 8000, 4).unwrap();
        for row in &rows {
            let spec = crate::analytics::OpposingProcessSpec::new(
                row.lambda,
                row.lambda / 2.0,
                row.capacity,
            )
            .unwrap();
            let exact = crate::analytics::opposing_max_exact_auto(&spec).unwrap();
            let e = cell(row, 0, 1);
            assert!(
                e.agrees_with(exact, 4.0) || (e.value - exact).abs() < 1e-3,
                "{e:?} vs {exact}"
            );
        }
        for (d, s) in [(0, 1), (1, 1)] {
            let first = cell(&rows[0], d, s).value;
            let last = cell(&rows[2], d, s).value;
            assert!(last <= first, "({d},{s}): {first} -> {last}");
            assert!(last < 0.02);
        }
    }
}
