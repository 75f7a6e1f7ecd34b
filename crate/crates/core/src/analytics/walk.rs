//! Random-walk view of two opposing Poisson processes.
//!
//! Conditioned on `n` points in `[0, 1]`, each point is independently a
//! pre-arrival (up step) with probability `p = forward / (backward + forward)`
//! or a departure (down step) otherwise. Starting from the number of pending
//! departures, the occupancy path is that walk shifted up by `G_n`, the number
//! of down steps, so its maximum is `G_n + M_n` with `M_n` the walk's maximum.

use crate::math;
use crate::{Error, Result};

/// Asymmetric simple random walk. `length == None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomWalkSpec {
    up_prob: f64,
    pub length: Option<usize>,
}

impl RandomWalkSpec {
    pub fn new(up_prob: f64, length: Option<usize>) -> Result<Self> {
        if !(0.0..1.0).contains(&up_prob) {
            return Err(Error::param("up_prob", "must lie in [0, 1)"));
        }
        Ok(Self { up_prob, length })
    }

    pub fn up_prob(&self) -> f64 {
        self.up_prob
    }

    pub fn down_prob(&self) -> f64 {
        1.0 - self.up_prob
    }

    pub fn has_negative_drift(&self) -> bool {
        self.up_prob < self.down_prob()
    }
}

/// `P(M_inf >= b) = (p / q)^b` for a walk with up-probability `p < 1/2`.
pub fn rw_hitting_prob(p: f64, b: u32) -> Result<f64> {
    if !(0.0..0.5).contains(&p) {
        return Err(Error::NonNegativeDrift { p });
    }
    Ok(math::powi(p / (1.0 - p), b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WalkStatistics {
    /// Number of down steps `G_n`.
    pub down_steps: u32,
    /// Maximum level `M_n`, including the starting level 0.
    pub max_level: u32,
    /// Final level.
    pub final_level: i64,
}

/// Walk statistics for a path given as up (`true`) / down (`false`) steps.
pub fn walk_statistics(steps: &[bool]) -> WalkStatistics {
    let mut level = 0i64;
    let mut max = 0i64;
    let mut downs = 0u32;
    for &up in steps {
        if up {
            level += 1;
            max = max.max(level);
        } else {
            level -= 1;
            downs += 1;
        }
    }
    WalkStatistics {
        down_steps: downs,
        max_level: max as u32,
        final_level: level,
    }
}
