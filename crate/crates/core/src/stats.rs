//! Small estimators shared by the Monte Carlo and simulation code.

use crate::math;

/// Hit counter for a Bernoulli estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub hits: u64,
    pub trials: u64,
}

impl Tally {
    pub fn record(&mut self, hit: bool) {
        self.trials += 1;
        self.hits += u64::from(hit);
    }

    pub fn merge(&mut self, other: Tally) {
        self.hits += other.hits;
        self.trials += other.trials;
    }

    /// Proportion with binomial standard error. `None` without trials.
    pub fn estimate(&self) -> Option<Estimate> {
        if self.trials == 0 {
            return None;
        }
        let n = self.trials as f64;
        let p = self.hits as f64 / n;
        Some(Estimate {
            value: p,
            std_error: math::sqrt(p * (1.0 - p) / n),
            n: self.trials,
        })
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: u64,
}

impl Estimate {
    /// `|self - target| <= k * se`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate {
            value: f64::NAN,
            std_error: f64::NAN,
            n: 0,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        math::sqrt(var / n as f64)
    } else {
        0.0
    };
    Estimate {
        value: mean,
        std_error: se,
        n: n as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_estimate() {
        let mut t = Tally::default();
        assert!(t.estimate().is_none());
        for i in 0..100 {
            t.record(i % 4 == 0);
        }
        let e = t.estimate().unwrap();
        assert_eq!(e.value, 0.25);
        assert!((e.std_error - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mean_se_of_constant_is_zero() {
        let e = mean_and_se(&[2.0, 2.0, 2.0]);
        assert_eq!(e.value, 2.0);
        assert_eq!(e.std_error, 0.0);
    }
}
