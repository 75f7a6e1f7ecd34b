//! Period-by-period simulation of a [`DpInstance`].

use crate::ledger::BookingLedger;
use crate::model::Request;
use crate::policy::{AdmissionPolicy, DpInstance};
use crate::rng::substream;
use crate::Result;

use super::{uniform, ARRIVAL_STREAM, POLICY_STREAM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodRun {
    /// Total reward over the `T` periods.
    pub revenue: f64,
    pub offered: u64,
    pub accepted: u64,
}

/// Plays one horizon of `instance` under `policy`. Period `i` is the ledger
/// interval `[i, i + 1)`; windows are cut at `T` and windows starting after
/// `T` count as no arrival.
pub fn run_periods(
    instance: &DpInstance,
    policy: &mut dyn AdmissionPolicy,
    seed: u64,
) -> Result<PeriodRun> {
    instance.validate()?;
    let mut arrivals = substream(seed, &[ARRIVAL_STREAM]);
    let mut coins = substream(seed, &[POLICY_STREAM]);
    let mut ledger = BookingLedger::new();
    let mut run = PeriodRun {
        revenue: 0.0,
        offered: 0,
        accepted: 0,
    };
    for t in 1..=instance.periods {
        let mut u = uniform(&mut arrivals);
        let v = uniform(&mut arrivals);
        let Some(class) = instance.classes.iter().find(|c| {
            if u < c.arrival_prob {
                true
            } else {
                u -= c.arrival_prob;
                false
            }
        }) else {
            continue;
        };
        let mut acc = 0.0;
        let window = class
            .windows
            .iter()
            .find(|w| {
                acc += w.prob;
                v < acc
            })
            .unwrap_or_else(|| class.windows.last().expect("validated"));
        let Some((first, last)) = instance.window_periods(t, window.offset, window.length) else {
            continue;
        };
        let request = Request {
            class_id: class.class_id,
            arrival_time: t as f64,
            delay: window.offset,
            duration: last - first + 1,
            sequence_number: run.offered,
        };
        run.offered += 1;
        ledger.release_before(t as f64);
        if policy
            .decide(&request, &ledger, instance.capacity, &mut coins)?
            .is_accept()
        {
            ledger.reserve(request.start(), request.end())?;
            run.accepted += 1;
            run.revenue += class.reward * request.duration as f64;
        }
    }
    Ok(run)
}
