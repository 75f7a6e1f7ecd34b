//! JSON experiment configs and their translation into core types.

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use lossnet_core::distributions::MergedDistribution;
use lossnet_core::policy::{thinned_probabilities, DpClass, DpInstance, DpSolver, DpWindow};
use lossnet_core::pricing::{DemandCurve, PricedClass};
use lossnet_core::{ClassSpec, SystemConfig};

/// One `[d, s, prob]` triple of a joint pmf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmfEntry(pub u32, pub u32, pub f64);

fn triples(pmf: &[PmfEntry]) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
    pmf.iter().map(|&PmfEntry(d, s, p)| (d, s, p))
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    pub id: u32,
    pub arrival_rate: f64,
    #[serde(default = "one")]
    pub reward_rate: f64,
    pub pmf: Vec<PmfEntry>,
}

impl ClassConfig {
    pub fn to_spec(&self) -> Result<ClassSpec> {
        ClassSpec::new(
            self.id,
            self.arrival_rate,
            self.reward_rate,
            triples(&self.pmf),
        )
        .with_context(|| format!("class {}", self.id))
    }
}

pub fn class_specs(classes: &[ClassConfig]) -> Result<Vec<ClassSpec>> {
    ensure!(
        !classes.is_empty(),
        "`classes` must list at least one class"
    );
    classes.iter().map(ClassConfig::to_spec).collect()
}

fn default_samples() -> u64 {
    100_000
}

fn default_warmup() -> f64 {
    SystemConfig::DEFAULT_WARMUP_FRACTION
}

/// `sweep`: virtual blocking of a merged distribution along a grid of total
/// arrival rates. `epsilon = 0` is the critical regime `C = ceil(rho)`,
/// otherwise `C = ceil((1 + epsilon) rho)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub pmf: Vec<PmfEntry>,
    pub lambda_grid: Vec<f64>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_samples")]
    pub samples: u64,
}

impl SweepConfig {
    pub fn base_distribution(&self) -> Result<MergedDistribution> {
        Ok(MergedDistribution::from_joint(1.0, triples(&self.pmf))?)
    }
}

/// `blocking`: `P_d^s` for every type of the merged classes at capacity `C`,
/// optionally next to a coupled simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockingConfig {
    pub capacity: u32,
    pub classes: Vec<ClassConfig>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub policy: String,
    pub horizon: f64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.05
}

impl BlockingConfig {
    pub fn distribution(&self) -> Result<MergedDistribution> {
        Ok(lossnet_core::distributions::merge_classes(&class_specs(
            &self.classes,
        )?)?)
    }

    pub fn system(&self) -> Result<Option<SystemConfig>> {
        let Some(sim) = &self.simulate else {
            return Ok(None);
        };
        Ok(Some(SystemConfig {
            capacity: self.capacity,
            classes: class_specs(&self.classes)?,
            epsilon: sim.epsilon,
            horizon: sim.horizon,
            warmup_fraction: sim.warmup_fraction,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DemandConfig {
    Linear {
        base_rate: f64,
        choke_price: f64,
    },
    Exponential {
        base_rate: f64,
        scale: f64,
        choke_price: f64,
    },
}

impl DemandConfig {
    pub fn curve(&self) -> DemandCurve {
        match *self {
            DemandConfig::Linear {
                base_rate,
                choke_price,
            } => DemandCurve::Linear {
                base_rate,
                choke_price,
            },
            DemandConfig::Exponential {
                base_rate,
                scale,
                choke_price,
            } => DemandCurve::ExponentialCutoff {
                base_rate,
                scale,
                choke_price,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricedClassConfig {
    pub id: u32,
    pub demand: DemandConfig,
    pub pmf: Vec<PmfEntry>,
}

fn default_tol() -> f64 {
    1e-9
}

/// `pricing`: static prices by bisection, optionally checked on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingConfig {
    pub capacity: u32,
    pub epsilon: f64,
    pub classes: Vec<PricedClassConfig>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub grid_resolution: Option<usize>,
}

impl PricingConfig {
    pub fn priced_classes(&self) -> Result<Vec<PricedClass>> {
        ensure!(
            !self.classes.is_empty(),
            "`classes` must list at least one class"
        );
        self.classes
            .iter()
            .map(|c| {
                PricedClass::new(c.id, c.demand.curve(), triples(&c.pmf))
                    .with_context(|| format!("class {}", c.id))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub offset: u32,
    pub length: u32,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpClassConfig {
    pub id: u32,
    pub reward: f64,
    /// Per-period arrival probability; used when `delta` is absent.
    #[serde(default)]
    pub arrival_prob: Option<f64>,
    /// Poisson rate, thinned with `delta` into a per-period probability.
    #[serde(default)]
    pub arrival_rate: Option<f64>,
    pub windows: Vec<WindowConfig>,
}

/// `dp`: a small discrete instance for the dynamic program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpConfig {
    pub periods: u32,
    pub capacity: u32,
    /// Period length for Bernoulli thinning of `arrival_rate`s.
    #[serde(default)]
    pub delta: Option<f64>,
    pub classes: Vec<DpClassConfig>,
    /// Reachable-state guard for the solver.
    #[serde(default = "default_state_limit")]
    pub state_limit: usize,
}

fn default_state_limit() -> usize {
    lossnet_core::policy::DP_STATE_LIMIT
}

impl DpConfig {
    pub fn solver(&self) -> Result<DpSolver> {
        Ok(DpSolver::with_limit(self.instance()?, self.state_limit)?)
    }

    pub fn instance(&self) -> Result<DpInstance> {
        let probs = match self.delta {
            Some(delta) => {
                let rates = self
                    .classes
                    .iter()
                    .map(|c| {
                        c.arrival_rate.with_context(|| {
                            format!("class {} needs `arrival_rate` when `delta` is set", c.id)
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                thinned_probabilities(&rates, delta)?
            }
            None => self
                .classes
                .iter()
                .map(|c| {
                    c.arrival_prob.with_context(|| {
                        format!("class {} needs `arrival_prob` (or set `delta`)", c.id)
                    })
                })
                .collect::<Result<Vec<f64>>>()?,
        };
        let instance = DpInstance {
            periods: self.periods,
            capacity: self.capacity,
            classes: self
                .classes
                .iter()
                .zip(probs)
                .map(|(c, p)| DpClass {
                    class_id: c.id,
                    reward: c.reward,
                    arrival_prob: p,
                    windows: c
                        .windows
                        .iter()
                        .map(|w| DpWindow {
                            offset: w.offset,
                            length: w.length,
                            prob: w.p,
                        })
                        .collect(),
                })
                .collect(),
        };
        instance.validate()?;
        Ok(instance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub capacity: u32,
    pub horizon: f64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
    pub classes: Vec<ClassConfig>,
}

fn default_policies() -> Vec<String> {
    vec!["icsp".into(), "admit-all".into()]
}

fn default_reference() -> String {
    "lp-bound".into()
}

fn default_replications() -> u64 {
    10
}

fn default_scales() -> Vec<f64> {
    vec![1.0]
}

/// `bench`: policies compared over replications, either on a continuous
/// system (`system`) or on a discrete instance (`dp`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_policies")]
    pub policies: Vec<String>,
    /// `lp-bound`, `dp`, or the name of a listed policy.
    #[serde(default = "default_reference")]
    pub reference: String,
    #[serde(default = "default_replications")]
    pub replications: u64,
    /// Multipliers applied to capacity and every arrival rate together.
    #[serde(default = "default_scales")]
    pub capacity_scales: Vec<f64>,
    #[serde(default)]
    pub system: Option<SystemSection>,
    #[serde(default)]
    pub dp: Option<DpConfig>,
}

impl BenchConfig {
    /// The continuous system at one capacity scale.
    pub fn scaled_system(&self, scale: f64) -> Result<SystemConfig> {
        let Some(sys) = &self.system else {
            bail!("bench config has no `system` section");
        };
        ensure!(
            scale.is_finite() && scale > 0.0,
            "capacity scale {scale} is not > 0"
        );
        let classes = class_specs(&sys.classes)?
            .iter()
            .map(|c| c.with_arrival_rate(c.arrival_rate() * scale))
            .collect::<lossnet_core::Result<Vec<_>>>()?;
        Ok(SystemConfig {
            capacity: (sys.capacity as f64 * scale).round() as u32,
            classes,
            epsilon: self.epsilon,
            horizon: sys.horizon,
            warmup_fraction: sys.warmup_fraction,
        })
    }
}
