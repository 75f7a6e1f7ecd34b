//! The knapsack LP behind class selection.
//!
//! Maximize `sum r_k alpha_dsk lambda_dsk s` subject to
//! `sum alpha_dsk lambda_dsk s <= (1 - eps) C`, `0 <= alpha <= 1`. Every type of
//! a class has the same reward per unit of capacity, so the greedy fill by
//! descending `r_k` gives one `alpha_k` per class.

use alloc::format;
use alloc::vec::Vec;

use crate::model::ClassSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassAlpha {
    pub class_id: u32,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySolution {
    /// Acceptance probabilities in fill order (descending reward).
    pub alpha: Vec<ClassAlpha>,
    /// Last class the fill reached (`M'`); classes after it have `alpha = 0`.
    pub cutoff_class: u32,
    pub lp_objective: f64,
    /// Capacity used by the LP, `(1 - eps) C`.
    pub budget: f64,
}

impl PolicySolution {
    pub fn class_alpha(&self, class_id: u32) -> Option<f64> {
        self.alpha
            .iter()
            .find(|a| a.class_id == class_id)
            .map(|a| a.alpha)
    }

    /// `alpha_dsk`: the class-level value for every type in the class support.
    pub fn alpha_for(&self, class: &ClassSpec, delay: u32, duration: u32) -> f64 {
        if class.prob(delay, duration) > 0.0 {
            self.class_alpha(class.class_id()).unwrap_or(0.0)
        } else {
            0.0
        }
    }

    /// Position in fill order; `None` for unknown classes.
    pub fn rank(&self, class_id: u32) -> Option<usize> {
        self.alpha.iter().position(|a| a.class_id == class_id)
    }

    pub fn cutoff_rank(&self) -> usize {
        self.rank(self.cutoff_class)
            .expect("cutoff class is listed")
    }
}

/// Solves the knapsack LP greedily. Reward ties go to the smaller class id.
pub fn solve_knapsack_lp(
    classes: &[ClassSpec],
    capacity: u32,
    epsilon: f64,
) -> Result<PolicySolution> {
    if classes.is_empty() {
        return Err(Error::param("classes", "at least one class is required"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", format!("{epsilon} not in (0, 1)")));
    }
    let mut order: Vec<&ClassSpec> = classes.iter().collect();
    order.sort_by(|a, b| {
        b.reward_rate()
            .total_cmp(&a.reward_rate())
            .then(a.class_id().cmp(&b.class_id()))
    });
    let budget = (1.0 - epsilon) * capacity as f64;
    let mut used = 0.0;
    let mut objective = 0.0;
    let mut alpha = Vec::with_capacity(order.len());
    let mut cutoff = None;
    for class in order {
        let load = class.offered_load();
        let a = if cutoff.is_some() {
            0.0
        } else if load <= budget - used {
            1.0
        } else {
            cutoff = Some(class.class_id());
            ((budget - used) / load).clamp(0.0, 1.0)
        };
        used += a * load;
        objective += a * class.reward_rate() * load;
        alpha.push(ClassAlpha {
            class_id: class.class_id(),
            alpha: a,
        });
    }
    let cutoff_class = cutoff.unwrap_or_else(|| alpha.last().expect("nonempty").class_id);
    Ok(PolicySolution {
        alpha,
        cutoff_class,
        lp_objective: objective,
        budget,
    })
}
