//! The five CLI commands. Each loads its config, applies overrides, writes
//! one CSV table plus a manifest, and returns a JSON summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use lossnet_core::analytics::Regime;
use lossnet_core::policy::{
    solve_knapsack_lp, AdmissionPolicy, AdmitAll, DpInstance, DpPolicy, DpSolver, Icsp,
    PolicySolution, RejectAll,
};
use lossnet_core::pricing::{cross_validate_nlp1, solve_nlp2};
use lossnet_core::rng::derive_seed;
use lossnet_core::simulate::{run_coupled, summarize, BenchModel, Reference};
use lossnet_core::stats::Tally;
use lossnet_core::SystemConfig;

use crate::config::{BenchConfig, BlockingConfig, DpConfig, PricingConfig, SweepConfig};
use crate::output::{write_csv, write_manifest, ManifestInput};
use crate::overrides::load_with_overrides;
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sweep,
    Bench,
    Blocking,
    Pricing,
    Dp,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Bench => "bench",
            Command::Blocking => "blocking",
            Command::Pricing => "pricing",
            Command::Dp => "dp",
        }
    }
}

/// Everything a command needs from the command line.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub overrides: Vec<String>,
    pub replications: Option<u64>,
}

/// Runs `command`, writing the CSV and manifest; returns the summary.
pub fn execute(command: Command, spec: &RunSpec) -> Result<Value> {
    let text = fs::read_to_string(&spec.config)
        .with_context(|| format!("cannot read config file {}", spec.config.display()))?;
    let summary = match command {
        Command::Sweep => sweep(&load(&text, spec)?, spec)?,
        Command::Bench => bench(&load(&text, spec)?, spec)?,
        Command::Blocking => blocking(&load(&text, spec)?, spec)?,
        Command::Pricing => pricing(&load(&text, spec)?, spec)?,
        Command::Dp => dp(&load(&text, spec)?, spec)?,
    };
    write_manifest(&ManifestInput {
        command: command.name(),
        config_path: &spec.config,
        config_text: &text,
        seed: spec.seed,
        overrides: &spec.overrides,
        output: &spec.out,
        summary: summary.clone(),
    })?;
    Ok(summary)
}

fn load<T: Serialize + DeserializeOwned>(text: &str, spec: &RunSpec) -> Result<T> {
    load_with_overrides(text, &spec.overrides)
        .with_context(|| format!("in config file {}", spec.config.display()))
}

fn write(out: &Path, rows: &[impl Serialize]) -> Result<()> {
    write_csv(out, rows)
}

#[derive(Debug, Serialize)]
pub struct SweepRecord {
    pub lambda: f64,
    #[serde(rename = "C")]
    pub capacity: u32,
    pub d: u32,
    pub s: u32,
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

fn sweep(cfg: &SweepConfig, spec: &RunSpec) -> Result<Value> {
    ensure!(
        cfg.epsilon.is_finite() && cfg.epsilon >= 0.0,
        "`epsilon` must be >= 0 (0 selects the critical regime)"
    );
    let regime = if cfg.epsilon == 0.0 {
        Regime::Critical
    } else {
        Regime::Padded {
            epsilon: cfg.epsilon,
        }
    };
    let base = cfg.base_distribution()?;
    let rows = parallel::asymptotic_sweep(regime, &base, &cfg.lambda_grid, cfg.samples, spec.seed)?;
    let records: Vec<SweepRecord> = rows
        .iter()
        .flat_map(|row| {
            row.cells.iter().map(move |cell| SweepRecord {
                lambda: row.lambda,
                capacity: row.capacity,
                d: cell.d,
                s: cell.s,
                estimate: cell.estimate.value,
                std_error: cell.estimate.std_error,
                n_samples: cell.estimate.n,
                seed: spec.seed,
            })
        })
        .collect();
    write(&spec.out, &records)?;
    Ok(json!({
        "regime": if cfg.epsilon == 0.0 { "critical".to_string() } else { format!("padded(epsilon={})", cfg.epsilon) },
        "lambdas": rows.len(),
        "rows": records.len(),
    }))
}

#[derive(Debug, Serialize)]
pub struct BlockingRecord {
    /// `virtual`: Monte Carlo `P_d^s`; `simulated`: `Q_dsk` of the coupled
    /// simulation; `twin`: virtual blocking seen by its infinite twin.
    pub source: &'static str,
    pub class_id: Option<u32>,
    pub d: u32,
    pub s: u32,
    #[serde(rename = "C")]
    pub capacity: u32,
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub n: u64,
    pub seed: u64,
}

fn blocking(cfg: &BlockingConfig, spec: &RunSpec) -> Result<Value> {
    let dist = cfg.distribution()?;
    let mut records = Vec::new();
    for (i, (d, s)) in dist.support().enumerate() {
        let seed = derive_seed(spec.seed, &[i as u64]);
        let e =
            parallel::conditional_virtual_blocking(&dist, d, s, cfg.capacity, cfg.samples, seed)?;
        records.push(BlockingRecord {
            source: "virtual",
            class_id: None,
            d,
            s,
            capacity: cfg.capacity,
            estimate: Some(e.value),
            std_error: Some(e.std_error),
            n: e.n,
            seed,
        });
    }
    let mut summary = json!({ "virtual_cells": records.len() });
    if let Some(system) = cfg.system()? {
        let policy_name = cfg
            .simulate
            .as_ref()
            .map(|s| s.policy.clone())
            .unwrap_or_default();
        let reps = spec.replications.unwrap_or(1).max(1);
        let sim_seed = derive_seed(spec.seed, &[u64::MAX]);
        let lp = solve_knapsack_lp(&system.classes, system.capacity, system.epsilon)?;
        let reports = parallel::replications(
            reps,
            || make_policy(&policy_name, Some(&lp), None),
            |policy, rep| Ok(run_coupled(&system, policy, derive_seed(sim_seed, &[rep]))?),
        )?;
        let mut sim: BTreeMap<(u32, u32, u32), Tally> = BTreeMap::new();
        let mut twin: BTreeMap<(u32, u32), Tally> = BTreeMap::new();
        for rep in &reports {
            for c in &rep.capacitated.cells {
                sim.entry((c.class_id, c.d, c.s)).or_default().merge(Tally {
                    hits: c.offered - c.accepted,
                    trials: c.offered,
                });
            }
            for v in &rep.twin.virtual_blocking {
                twin.entry((v.d, v.s)).or_default().merge(Tally {
                    hits: v.blocked,
                    trials: v.offered,
                });
            }
        }
        for ((k, d, s), t) in sim {
            let e = t.estimate();
            records.push(BlockingRecord {
                source: "simulated",
                class_id: Some(k),
                d,
                s,
                capacity: system.capacity,
                estimate: e.map(|e| e.value),
                std_error: e.map(|e| e.std_error),
                n: t.trials,
                seed: sim_seed,
            });
        }
        for ((d, s), t) in twin {
            let e = t.estimate();
            records.push(BlockingRecord {
                source: "twin",
                class_id: None,
                d,
                s,
                capacity: system.capacity,
                estimate: e.map(|e| e.value),
                std_error: e.map(|e| e.std_error),
                n: t.trials,
                seed: sim_seed,
            });
        }
        let revenue: Vec<f64> = reports.iter().map(|r| r.capacitated.revenue_rate).collect();
        summary["policy"] = json!(policy_name);
        summary["replications"] = json!(reps);
        summary["revenue_rate"] = json!(lossnet_core::stats::mean_and_se(&revenue).value);
    }
    write(&spec.out, &records)?;
    summary["rows"] = json!(records.len());
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct PricingRecord {
    pub class_id: u32,
    pub price: f64,
    pub rate: f64,
    pub load: f64,
    pub load_share: f64,
}

fn pricing(cfg: &PricingConfig, spec: &RunSpec) -> Result<Value> {
    let classes = cfg.priced_classes()?;
    let sol = solve_nlp2(&classes, cfg.capacity, cfg.epsilon, cfg.tol)?;
    let records: Vec<PricingRecord> = sol
        .prices
        .iter()
        .map(|p| PricingRecord {
            class_id: p.class_id,
            price: p.price,
            rate: p.rate,
            load: p.load,
            load_share: if sol.load > 0.0 {
                p.load / sol.load
            } else {
                0.0
            },
        })
        .collect();
    write(&spec.out, &records)?;
    let mut summary = json!({
        "theta": sol.theta,
        "objective": sol.objective,
        "load": sol.load,
        "budget": sol.budget,
        "iterations": sol.iterations,
    });
    if let Some(resolution) = cfg.grid_resolution {
        let check = cross_validate_nlp1(&classes, cfg.capacity, cfg.epsilon, resolution)?;
        summary["nlp1_grid"] = json!({
            "resolution": resolution,
            "grid_objective": check.grid_objective,
            "grid_prices": check.grid_prices,
            "gap": check.gap,
            "error_bound": check.error_bound,
        });
    }
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct DpRecord {
    pub period: u32,
    /// Remaining capacity of periods `period..=T`, `;`-separated.
    pub remaining: String,
    pub class_id: u32,
    pub first: u32,
    pub last: u32,
    pub reward: f64,
    pub critical_reward: f64,
    pub decision: &'static str,
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

fn dp(cfg: &DpConfig, spec: &RunSpec) -> Result<Value> {
    let mut solver = cfg.solver()?;
    let periods = solver.instance().periods;
    let value = solver.solve()?;
    let table = solver.threshold_table()?;
    let records: Vec<DpRecord> = table
        .iter()
        .map(|e| DpRecord {
            period: e.period,
            remaining: join(&e.remaining),
            class_id: e.class_id,
            first: e.first,
            last: e.last,
            reward: e.reward,
            critical_reward: e.critical_reward,
            decision: if e.decision.is_accept() {
                "accept"
            } else {
                "reject"
            },
        })
        .collect();
    write(&spec.out, &records)?;
    Ok(json!({
        "value": value,
        "value_per_period": value / periods as f64,
        "states": solver.states_visited(),
        "rows": records.len(),
    }))
}

/// Builds a policy by name. `icsp` needs the LP solution, `dp` a solved
/// solver to clone.
fn make_policy(
    name: &str,
    lp: Option<&PolicySolution>,
    dp: Option<&DpSolver>,
) -> Result<Box<dyn AdmissionPolicy + Send>> {
    Ok(match name {
        "icsp" => Box::new(Icsp::new(lp.context("icsp needs an LP solution")?.clone())),
        "admit-all" => Box::new(AdmitAll),
        "reject-all" => Box::new(RejectAll),
        "dp" => Box::new(DpPolicy::new(
            dp.context("policy `dp` needs a `dp` instance in the bench config")?
                .clone(),
        )),
        other => bail!("unknown policy `{other}` (expected icsp, admit-all, reject-all or dp)"),
    })
}

#[derive(Debug, Serialize)]
pub struct BenchRecord {
    pub scale: f64,
    #[serde(rename = "C")]
    pub capacity: u32,
    pub policy: String,
    pub revenue_rate: f64,
    pub std_error: f64,
    pub replications: u64,
    pub reference: String,
    pub reference_value: f64,
    pub err: f64,
    pub ratio: f64,
    /// LP acceptance probabilities, in config class order.
    pub accept_probs: String,
}

fn accept_probs(lp: &PolicySolution, ids: &[u32]) -> String {
    let probs: Vec<f64> = ids
        .iter()
        .map(|&id| lp.class_alpha(id).unwrap_or(0.0))
        .collect();
    join(&probs)
}

fn bench(cfg: &BenchConfig, spec: &RunSpec) -> Result<Value> {
    ensure!(
        !cfg.policies.is_empty(),
        "`policies` must name at least one policy"
    );
    ensure!(
        cfg.system.is_some() != cfg.dp.is_some(),
        "bench config needs exactly one of `system` and `dp`"
    );
    let replications = spec.replications.unwrap_or(cfg.replications);
    ensure!(replications >= 1, "`replications` must be >= 1");
    let mut records = Vec::new();
    if let Some(dp_cfg) = &cfg.dp {
        ensure!(
            cfg.capacity_scales == [1.0],
            "`capacity_scales` is not supported with a `dp` instance"
        );
        let instance = dp_cfg.instance()?;
        bench_scale(
            cfg,
            spec,
            replications,
            Scenario::Periods(&instance, dp_cfg.state_limit),
            &mut records,
        )?;
    } else {
        for &scale in &cfg.capacity_scales {
            let system = cfg.scaled_system(scale)?;
            for w in system.validate()? {
                eprintln!("warning (scale {scale}): {w}");
            }
            bench_scale(
                cfg,
                spec,
                replications,
                Scenario::Continuous(scale, &system),
                &mut records,
            )?;
        }
    }
    write(&spec.out, &records)?;
    Ok(json!({ "rows": records.len(), "replications": replications }))
}

enum Scenario<'a> {
    Continuous(f64, &'a SystemConfig),
    Periods(&'a DpInstance, usize),
}

fn bench_scale(
    cfg: &BenchConfig,
    spec: &RunSpec,
    replications: u64,
    scenario: Scenario<'_>,
    records: &mut Vec<BenchRecord>,
) -> Result<()> {
    let (scale, capacity, classes, model) = match &scenario {
        Scenario::Continuous(scale, system) => (
            *scale,
            system.capacity,
            system.classes.clone(),
            BenchModel::Continuous(system),
        ),
        Scenario::Periods(instance, _) => (
            1.0,
            instance.capacity,
            instance.class_specs()?,
            BenchModel::Periods(instance),
        ),
    };
    let lp = solve_knapsack_lp(&classes, capacity, cfg.epsilon)?;
    let needs_dp = cfg.reference == "dp" || cfg.policies.iter().any(|p| p == "dp");
    let mut dp_value = None;
    let solver = match (&scenario, needs_dp) {
        (Scenario::Periods(instance, limit), true) => {
            let mut solver = DpSolver::with_limit((*instance).clone(), *limit)?;
            dp_value = Some(solver.solve()? / instance.periods as f64);
            Some(solver)
        }
        (Scenario::Continuous(..), true) => bail!("policy or reference `dp` needs a `dp` instance"),
        _ => None,
    };
    let reference = match cfg.reference.as_str() {
        "lp-bound" => Reference::Bound(lp.lp_objective / (1.0 - cfg.epsilon)),
        "dp" => Reference::Bound(dp_value.expect("solved above")),
        name => Reference::Policy(
            cfg.policies
                .iter()
                .position(|p| p == name)
                .with_context(|| format!("reference `{name}` is not in the policy list"))?,
        ),
    };
    let mut revenues = Vec::new();
    for name in &cfg.policies {
        make_policy(name, Some(&lp), solver.as_ref())?;
        let r = parallel::replications(
            replications,
            || make_policy(name, Some(&lp), solver.as_ref()),
            |policy, rep| Ok(model.replicate(policy, spec.seed, rep)?),
        )?;
        revenues.push(r);
    }
    let rows = summarize(&cfg.policies, &revenues, reference)?;
    let reference_value = match reference {
        Reference::Bound(b) => b,
        Reference::Policy(i) => rows[i].revenue.value,
    };
    let ids: Vec<u32> = classes.iter().map(|c| c.class_id()).collect();
    for row in rows {
        records.push(BenchRecord {
            scale,
            capacity,
            policy: row.policy,
            revenue_rate: row.revenue.value,
            std_error: row.revenue.std_error,
            replications,
            reference: cfg.reference.clone(),
            reference_value,
            err: row.err,
            ratio: row.ratio,
            accept_probs: accept_probs(&lp, &ids),
        });
    }
    Ok(())
}
