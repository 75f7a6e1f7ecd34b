//! Policy comparison over independent replications.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::SystemConfig;
use crate::policy::{AdmissionPolicy, DpInstance};
use crate::rng::derive_seed;
use crate::stats::{mean_and_se, Estimate};
use crate::{Error, Result};

use super::{run, run_periods};

/// What the policies are run on.
#[derive(Debug, Clone, Copy)]
pub enum BenchModel<'a> {
    Continuous(&'a SystemConfig),
    /// Revenue is reported per period.
    Periods(&'a DpInstance),
}

impl BenchModel<'_> {
    /// Revenue rate of one replication. Replication `rep` uses the same
    /// arrivals for every policy.
    pub fn replicate(&self, policy: &mut dyn AdmissionPolicy, seed: u64, rep: u64) -> Result<f64> {
        let seed = derive_seed(seed, &[rep]);
        match self {
            BenchModel::Continuous(config) => Ok(run(config, policy, seed)?.revenue_rate),
            BenchModel::Periods(instance) => {
                Ok(run_periods(instance, policy, seed)?.revenue / instance.periods as f64)
            }
        }
    }
}

/// Comparison baseline for the `err` column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Index into the policy list.
    Policy(usize),
    /// A known revenue rate such as the LP bound.
    Bound(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub policy: String,
    /// Mean revenue rate and its standard error over replications.
    pub revenue: Estimate,
    /// `|R - R_ref| / R_ref`.
    pub err: f64,
    /// `R / R_ref`.
    pub ratio: f64,
}

/// Builds the comparison table from per-policy replication revenues.
pub fn summarize(
    names: &[String],
    revenues: &[Vec<f64>],
    reference: Reference,
) -> Result<Vec<BenchRow>> {
    if names.len() != revenues.len() || names.is_empty() {
        return Err(Error::param("policies", "need one revenue list per policy"));
    }
    let estimates: Vec<Estimate> = revenues.iter().map(|r| mean_and_se(r)).collect();
    let r_ref = match reference {
        Reference::Policy(i) => {
            estimates
                .get(i)
                .ok_or_else(|| Error::param("reference", format!("no policy at index {i}")))?
                .value
        }
        Reference::Bound(b) => b,
    };
    if !(r_ref.is_finite() && r_ref > 0.0) {
        return Err(Error::param(
            "reference",
            format!("reference revenue {r_ref} is not > 0"),
        ));
    }
    Ok(names
        .iter()
        .zip(estimates)
        .map(|(name, revenue)| BenchRow {
            policy: name.clone(),
            revenue,
            err: (revenue.value - r_ref).abs() / r_ref,
            ratio: revenue.value / r_ref,
        })
        .collect())
}

/// Runs every policy for `replications` replications and compares.
pub fn benchmark(
    model: BenchModel<'_>,
    policies: &mut [&mut dyn AdmissionPolicy],
    replications: u64,
    seed: u64,
    reference: Reference,
) -> Result<Vec<BenchRow>> {
    if replications == 0 {
        return Err(Error::param("replications", "must be >= 1"));
    }
    let mut names = Vec::new();
    let mut revenues = Vec::new();
    for policy in policies.iter_mut() {
        names.push(String::from(policy.name()));
        let r = (0..replications)
            .map(|rep| model.replicate(&mut **policy, seed, rep))
            .collect::<Result<Vec<f64>>>()?;
        revenues.push(r);
    }
    summarize(&names, &revenues, reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClassSpec;
    use crate::policy::{solve_knapsack_lp, AdmitAll, Icsp};
    use alloc::vec;

    fn cfg() -> SystemConfig {
        SystemConfig {
            capacity: 6,
            classes: vec![
                ClassSpec::new(1, 3.0, 2.0, [(0, 1, 0.5), (1, 2, 0.5)]).unwrap(),
                ClassSpec::new(2, 4.0, 1.0, [(0, 2, 1.0)]).unwrap(),
            ],
            epsilon: 0.05,
            horizon: 300.0,
            warmup_fraction: 0.2,
        }
    }

    #[test]
    fn reference_alone_has_zero_err() {
        let c = cfg();
        let mut p = AdmitAll;
        let rows = benchmark(
            BenchModel::Continuous(&c),
            &mut [&mut p],
            4,
            1,
            Reference::Policy(0),
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].err, 0.0);
    }

    #[test]
    fn revenue_below_lp_bound() {
        let c = cfg();
        let sol = solve_knapsack_lp(&c.classes, c.capacity, c.epsilon).unwrap();
        let bound = sol.lp_objective / (1.0 - c.epsilon);
        let mut icsp = Icsp::new(sol);
        let mut all = AdmitAll;
        let rows = benchmark(
            BenchModel::Continuous(&c),
            &mut [&mut icsp, &mut all],
            10,
            2,
            Reference::Bound(bound),
        )
        .unwrap();
        for row in rows {
            assert!(
                row.ratio <= 1.0 + 3.0 * row.revenue.std_error / bound,
                "{row:?}"
            );
        }
    }

    #[test]
    fn zero_reference_is_an_error() {
        let names = vec![String::from("a")];
        assert!(summarize(&names, &[vec![0.0, 0.0]], Reference::Policy(0)).is_err());
        assert!(summarize(&names, &[vec![1.0]], Reference::Policy(3)).is_err());
    }
}
