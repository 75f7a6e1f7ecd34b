//! Static pricing.
//!
//! Each class's arrival rate falls with its price, `lambda_k(r_k)`, while the
//! `(d, s)` pmf stays fixed, so the load of class `k` is
//! `lambda_k(r_k) mu_k`. With all classes admitted the problem is
//!
//! ```text
//! max sum_k r_k lambda_k(r_k) mu_k   s.t.   sum_k lambda_k(r_k) mu_k <= (1 - eps) C
//! ```
//!
//! solved by bisection on the multiplier `Theta` of the capacity constraint.
//! [`cross_validate_nlp1`] checks the answer against a grid search over
//! prices with fractional admission.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::model::ClassSpec;
use crate::{Error, Result};

/// Bracket tolerance of the inner golden-section search.
pub const INNER_TOLERANCE: f64 = 1e-9;

const MAX_BISECTIONS: usize = 200;
const CONCAVITY_PROBES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DemandCurve {
    /// `lambda_0 (1 - r / r_inf)`.
    Linear { base_rate: f64, choke_price: f64 },
    /// `lambda_0 (exp(-r / beta) - exp(-r_inf / beta)) / (1 - exp(-r_inf / beta))`.
    ExponentialCutoff {
        base_rate: f64,
        scale: f64,
        choke_price: f64,
    },
}

impl DemandCurve {
    pub fn validate(&self) -> Result<()> {
        let (base, choke) = (self.base_rate(), self.choke_price());
        if !(base.is_finite() && base >= 0.0) {
            return Err(Error::param("base_rate", "must be finite and >= 0"));
        }
        if !(choke.is_finite() && choke > 0.0) {
            return Err(Error::param("choke_price", "must be finite and > 0"));
        }
        if let DemandCurve::ExponentialCutoff { scale, .. } = *self {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::param("scale", "must be finite and > 0"));
            }
        }
        Ok(())
    }

    pub fn base_rate(&self) -> f64 {
        match *self {
            DemandCurve::Linear { base_rate, .. }
            | DemandCurve::ExponentialCutoff { base_rate, .. } => base_rate,
        }
    }

    pub fn choke_price(&self) -> f64 {
        match *self {
            DemandCurve::Linear { choke_price, .. }
            | DemandCurve::ExponentialCutoff { choke_price, .. } => choke_price,
        }
    }

    /// `lambda(r)`, zero from the choke price on.
    pub fn rate(&self, price: f64) -> f64 {
        let choke = self.choke_price();
        if price >= choke {
            return 0.0;
        }
        let r = price.max(0.0);
        match *self {
            DemandCurve::Linear { base_rate, .. } => base_rate * (1.0 - r / choke),
            DemandCurve::ExponentialCutoff {
                base_rate, scale, ..
            } => {
                let floor = math::exp(-choke / scale);
                base_rate * (math::exp(-r / scale) - floor) / (1.0 - floor)
            }
        }
    }

    /// `sup |d/dr (r lambda(r))|` over `[0, r_inf]` for a concave revenue curve.
    ///
    /// Both families start at slope `lambda_0`; for the exponential family the
    /// slope at the choke price is `-lambda_0 x / (e^x - 1)` with
    /// `x = r_inf / beta`, never steeper.
    pub fn revenue_slope_bound(&self) -> f64 {
        self.base_rate()
    }

    /// Maximizer of `(r - theta) lambda(r)` over `[theta, r_inf]`.
    fn inner_max(&self, theta: f64) -> f64 {
        let choke = self.choke_price();
        if theta >= choke {
            return choke;
        }
        match *self {
            DemandCurve::Linear { .. } => 0.5 * (choke + theta),
            DemandCurve::ExponentialCutoff { .. } => golden_max(
                |r| (r - theta) * self.rate(r),
                theta,
                choke,
                INNER_TOLERANCE,
            ),
        }
    }

    /// Probes `r lambda(r)` for concavity on `[0, r_inf]`.
    fn revenue_is_concave(&self) -> bool {
        let choke = self.choke_price();
        let h = choke / CONCAVITY_PROBES as f64;
        let g = |i: usize| {
            let r = h * i as f64;
            r * self.rate(r)
        };
        let scale = self.base_rate() * choke;
        (1..CONCAVITY_PROBES).all(|i| g(i - 1) - 2.0 * g(i) + g(i + 1) <= 1e-12 * scale)
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = 0.5 * (math::sqrt(5.0) - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    0.5 * (a + b)
}

/// A class whose arrival rate is set by its price.
#[derive(Debug, Clone, PartialEq)]
pub struct PricedClass {
    pub curve: DemandCurve,
    /// Class id and `(d, s)` pmf; its own rate and reward are ignored.
    template: ClassSpec,
}

impl PricedClass {
    pub fn new(
        class_id: u32,
        curve: DemandCurve,
        entries: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<Self> {
        curve.validate()?;
        Ok(Self {
            curve,
            template: ClassSpec::new(class_id, 0.0, 0.0, entries)?,
        })
    }

    pub fn class_id(&self) -> u32 {
        self.template.class_id()
    }

    pub fn mean_service(&self) -> f64 {
        self.template.mean_service()
    }

    /// `sum_{d,s} lambda_dsk(r) s`.
    pub fn load(&self, price: f64) -> f64 {
        self.curve.rate(price) * self.mean_service()
    }

    /// The class at a fixed price, with reward rate equal to the price.
    pub fn at_price(&self, price: f64) -> Result<ClassSpec> {
        ClassSpec::new(
            self.class_id(),
            self.curve.rate(price),
            price,
            self.template
                .pmf()
                .iter()
                .map(|m| (m.delay, m.duration, m.prob)),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassPrice {
    pub class_id: u32,
    pub price: f64,
    pub rate: f64,
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingSolution {
    pub theta: f64,
    pub prices: Vec<ClassPrice>,
    pub objective: f64,
    pub load: f64,
    /// `(1 - eps) C`.
    pub budget: f64,
    pub iterations: usize,
}

fn check_inputs(classes: &[PricedClass], epsilon: f64) -> Result<()> {
    if classes.is_empty() {
        return Err(Error::param("classes", "at least one class is required"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", format!("{epsilon} not in (0, 1)")));
    }
    Ok(())
}

fn evaluate(
    classes: &[PricedClass],
    theta: f64,
    budget: f64,
    iterations: usize,
) -> PricingSolution {
    let prices: Vec<ClassPrice> = classes
        .iter()
        .map(|c| {
            let price = c.curve.inner_max(theta);
            ClassPrice {
                class_id: c.class_id(),
                price,
                rate: c.curve.rate(price),
                load: c.load(price),
            }
        })
        .collect();
    let objective = prices.iter().map(|p| p.price * p.load).sum();
    let load = prices.iter().map(|p| p.load).sum();
    PricingSolution {
        theta,
        prices,
        objective,
        load,
        budget,
        iterations,
    }
}

/// Solves the pricing problem by bisection on `Theta` over `[0, max r_inf]`.
///
/// Stops once the bracket is below `tol` and the unused capacity below
/// `max(tol C, tol)`, or after a fixed number of halvings; the returned
/// prices always respect the capacity constraint.
pub fn solve_nlp2(
    classes: &[PricedClass],
    capacity: u32,
    epsilon: f64,
    tol: f64,
) -> Result<PricingSolution> {
    check_inputs(classes, epsilon)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::param("tol", "must be finite and > 0"));
    }
    for c in classes {
        if !c.curve.revenue_is_concave() {
            return Err(Error::NonConcave {
                class: c.class_id(),
            });
        }
    }
    let budget = (1.0 - epsilon) * capacity as f64;
    let slack = evaluate(classes, 0.0, budget, 0);
    if slack.load <= budget {
        return Ok(slack);
    }
    let mut lo = 0.0;
    let mut hi = classes
        .iter()
        .map(|c| c.curve.choke_price())
        .fold(0.0, f64::max);
    let mut best = evaluate(classes, hi, budget, 0);
    let residual_tol = (tol * capacity as f64).max(tol);
    for iteration in 1..=MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let sol = evaluate(classes, mid, budget, iteration);
        if sol.load <= budget {
            hi = mid;
            best = sol;
        } else {
            lo = mid;
        }
        best.iterations = iteration;
        if hi - lo < tol && budget - best.load < residual_tol {
            break;
        }
    }
    Ok(best)
}

/// Grid search over prices with greedy fractional admission, next to the
/// bisection answer.
#[derive(Debug, Clone, PartialEq)]
pub struct Nlp1Check {
    pub grid_objective: f64,
    pub grid_prices: Vec<f64>,
    pub nlp2_objective: f64,
    pub gap: f64,
    /// `sum_k h_k mu_k sup|d/dr(r lambda_k)|`: the grid optimum is at most
    /// this far below the true optimum.
    pub error_bound: f64,
}

/// Evaluates the price-and-admission program on a grid of `resolution + 1`
/// prices per class (spanning `[0, r_inf]`), with the admission fractions
/// filled greedily for each price vector.
pub fn cross_validate_nlp1(
    classes: &[PricedClass],
    capacity: u32,
    epsilon: f64,
    resolution: usize,
) -> Result<Nlp1Check> {
    check_inputs(classes, epsilon)?;
    if classes.len() > 3 {
        return Err(Error::param(
            "classes",
            "grid check supports at most 3 classes",
        ));
    }
    if resolution == 0 {
        return Err(Error::param("resolution", "must be >= 1"));
    }
    let budget = (1.0 - epsilon) * capacity as f64;
    let steps: Vec<f64> = classes
        .iter()
        .map(|c| c.curve.choke_price() / resolution as f64)
        .collect();
    let m = classes.len();
    let mut index = alloc::vec![0usize; m];
    let mut prices = alloc::vec![0.0; m];
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut items: Vec<(f64, f64)> = Vec::with_capacity(m);
    loop {
        items.clear();
        for k in 0..m {
            prices[k] = steps[k] * index[k] as f64;
            items.push((prices[k], classes[k].load(prices[k])));
        }
        items.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut room = budget;
        let mut value = 0.0;
        for &(price, load) in &items {
            let take = load.min(room.max(0.0));
            value += price * take;
            room -= take;
        }
        if value > best.0 {
            best = (value, prices.clone());
        }
        let mut k = 0;
        while k < m {
            index[k] += 1;
            if index[k] <= resolution {
                break;
            }
            index[k] = 0;
            k += 1;
        }
        if k == m {
            break;
        }
    }
    let nlp2 = solve_nlp2(classes, capacity, epsilon, 1e-10)?;
    let error_bound = classes
        .iter()
        .zip(&steps)
        .map(|(c, h)| h * c.mean_service() * c.curve.revenue_slope_bound())
        .sum();
    Ok(Nlp1Check {
        grid_objective: best.0,
        grid_prices: best.1,
        nlp2_objective: nlp2.objective,
        gap: (best.0 - nlp2.objective).abs(),
        error_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn linear(id: u32, base: f64, choke: f64, entries: &[(u32, u32, f64)]) -> PricedClass {
        PricedClass::new(
            id,
            DemandCurve::Linear {
                base_rate: base,
                choke_price: choke,
            },
            entries.iter().copied(),
        )
        .unwrap()
    }

    #[test]
    fn slack_linear_prices_at_half_choke() {
        let c = vec![linear(1, 10.0, 4.0, &[(0, 2, 1.0)])];
        let sol = solve_nlp2(&c, 100, 0.1, 1e-10).unwrap();
        assert!((sol.prices[0].price - 2.0).abs() < 1e-12);
        assert_eq!(sol.theta, 0.0);
    }

    #[test]
    fn binding_capacity_raises_price() {
        // Budget is half of the load at r_inf / 2.
        let (base, choke, mu) = (40.0, 2.0, 1.5);
        let c = vec![linear(1, base, choke, &[(0, 1, 0.5), (1, 2, 0.5)])];
        let eps = 0.25;
        let load_half = base * 0.5 * mu;
        let cap = (0.5 * load_half / (1.0 - eps)) as u32;
        let budget = (1.0 - eps) * cap as f64;
        let sol = solve_nlp2(&c, cap, eps, 1e-10).unwrap();
        assert!(sol.prices[0].price > 1.0);
        assert!(sol.load <= budget && budget - sol.load < 1e-6);
        // Dense grid over the price.
        let n = 100_000;
        let grid_best = (0..=n)
            .map(|i| choke * i as f64 / n as f64)
            .filter(|&r| c[0].load(r) <= budget)
            .map(|r| r * c[0].load(r))
            .fold(0.0, f64::max);
        assert!(
            sol.objective >= grid_best - 1e-6,
            "{} vs {grid_best}",
            sol.objective
        );
        assert!(sol.objective <= grid_best + base * mu * choke / n as f64);
    }

    #[test]
    fn zero_capacity_chokes_demand() {
        let c = vec![linear(1, 10.0, 3.0, &[(0, 1, 1.0)])];
        let sol = solve_nlp2(&c, 0, 0.1, 1e-9).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.load, 0.0);
        let check = cross_validate_nlp1(&c, 0, 0.1, 50).unwrap();
        assert_eq!(check.grid_objective, 0.0);
    }

    #[test]
    fn no_demand_returns_zero_theta() {
        let c = vec![linear(1, 0.0, 3.0, &[(0, 1, 1.0)])];
        let sol = solve_nlp2(&c, 5, 0.1, 1e-9).unwrap();
        assert_eq!(sol.theta, 0.0);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn symmetric_classes_share_a_price() {
        let c = vec![
            linear(1, 20.0, 5.0, &[(0, 1, 1.0)]),
            linear(2, 20.0, 5.0, &[(3, 1, 1.0)]),
        ];
        let sol = solve_nlp2(&c, 12, 0.2, 1e-10).unwrap();
        assert_eq!(sol.prices[0].price, sol.prices[1].price);
        let check = cross_validate_nlp1(&c, 12, 0.2, 200).unwrap();
        assert!(check.gap <= check.error_bound + 1e-9, "{check:?}");
    }

    #[test]
    fn load_non_increasing_in_theta() {
        let c = vec![
            linear(1, 20.0, 5.0, &[(0, 1, 1.0)]),
            PricedClass::new(
                2,
                DemandCurve::ExponentialCutoff {
                    base_rate: 15.0,
                    scale: 2.0,
                    choke_price: 3.0,
                },
                [(1, 2, 1.0)],
            )
            .unwrap(),
        ];
        let mut prev = f64::INFINITY;
        for i in 0..=60 {
            let sol = evaluate(&c, 0.1 * i as f64, 0.0, 0);
            assert!(sol.load <= prev + 1e-12);
            prev = sol.load;
        }
    }

    #[test]
    fn exponential_inner_max_matches_grid() {
        let curve = DemandCurve::ExponentialCutoff {
            base_rate: 7.0,
            scale: 1.5,
            choke_price: 2.5,
        };
        for theta in [0.0, 0.4, 1.3] {
            let r = curve.inner_max(theta);
            let f = |x: f64| (x - theta) * curve.rate(x);
            let n = 200_000;
            let best = (0..=n)
                .map(|i| theta + (2.5 - theta) * i as f64 / n as f64)
                .map(f)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(f(r) >= best - 1e-9);
        }
    }

    #[test]
    fn non_concave_revenue_rejected() {
        let c = vec![PricedClass::new(
            4,
            DemandCurve::ExponentialCutoff {
                base_rate: 5.0,
                scale: 1.0,
                choke_price: 6.0,
            },
            [(0, 1, 1.0)],
        )
        .unwrap()];
        assert_eq!(
            solve_nlp2(&c, 3, 0.1, 1e-9),
            Err(Error::NonConcave { class: 4 })
        );
    }

    #[test]
    fn grid_never_beats_bisection_by_more_than_tolerance() {
        let c = vec![
            linear(1, 30.0, 2.0, &[(0, 1, 1.0)]),
            linear(2, 10.0, 6.0, &[(0, 3, 1.0)]),
        ];
        let check = cross_validate_nlp1(&c, 15, 0.1, 300).unwrap();
        assert!(check.grid_objective <= check.nlp2_objective + 1e-7);
        assert!(check.nlp2_objective - check.grid_objective <= check.error_bound);
    }

    #[test]
    fn too_many_classes_for_grid() {
        let c: Vec<_> = (0..4)
            .map(|i| linear(i, 1.0, 1.0, &[(0, 1, 1.0)]))
            .collect();
        assert!(cross_validate_nlp1(&c, 5, 0.1, 10).is_err());
    }
}
