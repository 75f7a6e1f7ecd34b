//! Thread-parallel versions of the core Monte Carlo drivers.
//!
//! Work is split into the same seed-addressed chunks and replications the
//! sequential drivers use, and results are combined in index order, so the
//! output does not depend on the number of threads.

use anyhow::Result;
use rayon::prelude::*;

use lossnet_core::analytics::occupancy::window_blocking_chunk;
use lossnet_core::analytics::sweep::{assemble_rows, sweep_jobs};
use lossnet_core::analytics::{check_support, Regime, SweepRow};
use lossnet_core::distributions::MergedDistribution;
use lossnet_core::policy::AdmissionPolicy;
use lossnet_core::rng;
use lossnet_core::stats::{Estimate, Tally};

/// Replications handed to one policy instance.
const REPLICATION_BATCH: u64 = 16;

fn sum_tallies(tallies: impl Iterator<Item = Tally>) -> Tally {
    tallies.fold(Tally::default(), |mut acc, t| {
        acc.merge(t);
        acc
    })
}

/// Parallel `asymptotic_sweep`; identical rows.
pub fn asymptotic_sweep(
    regime: Regime,
    base: &MergedDistribution,
    lambda_grid: &[f64],
    n_samples: u64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    anyhow::ensure!(n_samples >= 1, "`samples` must be >= 1");
    let jobs = sweep_jobs(regime, base, lambda_grid, seed)?;
    let tasks: Vec<(usize, u64, u64)> = (0..jobs.len())
        .flat_map(|j| rng::chunks(n_samples).map(move |(i, n)| (j, i, n)))
        .collect();
    let results = tasks
        .par_iter()
        .map(|&(j, i, n)| jobs[j].run_chunk(i, n))
        .collect::<lossnet_core::Result<Vec<Tally>>>()?;
    let mut tallies = vec![Tally::default(); jobs.len()];
    for (&(j, _, _), t) in tasks.iter().zip(results) {
        tallies[j].merge(t);
    }
    Ok(assemble_rows(&jobs, &tallies))
}

/// Parallel `conditional_virtual_blocking`; identical estimate.
pub fn conditional_virtual_blocking(
    dist: &MergedDistribution,
    d: u32,
    s: u32,
    threshold: u32,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    anyhow::ensure!(n_samples >= 1, "`samples` must be >= 1");
    check_support(dist, d, s)?;
    let chunks: Vec<(u64, u64)> = rng::chunks(n_samples).collect();
    let tallies = chunks
        .par_iter()
        .map(|&(i, n)| window_blocking_chunk(dist, d, s, threshold, seed, i, n))
        .collect::<lossnet_core::Result<Vec<Tally>>>()?;
    Ok(sum_tallies(tallies.into_iter())
        .estimate()
        .expect("at least one sample"))
}

/// Runs `f(policy, rep)` for `rep in 0..replications` in parallel, building
/// one policy per batch with `make`. Results come back in replication order.
pub fn replications<T, M, F>(replications: u64, make: M, f: F) -> Result<Vec<T>>
where
    T: Send,
    M: Fn() -> Result<Box<dyn AdmissionPolicy + Send>> + Sync,
    F: Fn(&mut dyn AdmissionPolicy, u64) -> Result<T> + Sync,
{
    let batches: Vec<(u64, u64)> = (0..replications)
        .step_by(REPLICATION_BATCH as usize)
        .map(|start| (start, (start + REPLICATION_BATCH).min(replications)))
        .collect();
    let out = batches
        .par_iter()
        .map(|&(start, end)| {
            let mut policy = make()?;
            (start..end)
                .map(|rep| f(policy.as_mut(), rep))
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<Vec<T>>>>()?;
    Ok(out.into_iter().flatten().collect())
}
