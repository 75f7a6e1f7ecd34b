use lossnet_core::policy::{solve_knapsack_lp, Icsp};
use lossnet_core::pricing::{cross_validate_nlp1, solve_nlp2, DemandCurve, PricedClass};
use lossnet_core::rng::derive_seed;
use lossnet_core::simulate::run;
use lossnet_core::stats::mean_and_se;
use lossnet_core::SystemConfig;

fn classes() -> Vec<PricedClass> {
    vec![
        PricedClass::new(
            1,
            DemandCurve::Linear {
                base_rate: 6.0,
                choke_price: 4.0,
            },
            [(0, 1, 0.5), (1, 2, 0.5)],
        )
        .unwrap(),
        PricedClass::new(
            2,
            DemandCurve::ExponentialCutoff {
                base_rate: 5.0,
                scale: 1.5,
                choke_price: 3.0,
            },
            [(0, 2, 1.0)],
        )
        .unwrap(),
    ]
}

#[test]
fn grid_and_bisection_agree() {
    let cs = classes();
    for capacity in [0, 3, 8, 30] {
        let check = cross_validate_nlp1(&cs, capacity, 0.1, 400).unwrap();
        assert!(
            check.grid_objective <= check.nlp2_objective + 1e-7,
            "{check:?}"
        );
        assert!(check.gap <= check.error_bound + 1e-7, "{check:?}");
    }
}

#[test]
fn priced_icsp_stays_under_lp_bound() {
    let cs = classes();
    let (capacity, eps) = (8, 0.1);
    let prices = solve_nlp2(&cs, capacity, eps, 1e-10).unwrap();
    let specs: Vec<_> = cs
        .iter()
        .zip(&prices.prices)
        .map(|(c, p)| c.at_price(p.price).unwrap())
        .collect();
    let lp = solve_knapsack_lp(&specs, capacity, eps).unwrap();
    assert!((lp.lp_objective - prices.objective).abs() < 1e-6);
    let cfg = SystemConfig {
        capacity,
        classes: specs,
        epsilon: eps,
        horizon: 1500.0,
        warmup_fraction: 0.2,
    };
    let revenues: Vec<f64> = (0..20)
        .map(|r| {
            run(&cfg, &mut Icsp::new(lp.clone()), derive_seed(8, &[r]))
                .unwrap()
                .revenue_rate
        })
        .collect();
    let e = mean_and_se(&revenues);
    assert!(
        e.value <= lp.lp_objective / (1.0 - eps) + 3.0 * e.std_error,
        "{e:?}"
    );
}
