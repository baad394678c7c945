mod common;

use common::oracle::gini_trapezoid;
use fairdispatch::dispatch::PaymentParams;
use fairdispatch::metrics::{
    gini, lorenz_points, percentile_of, period_seconds, period_shares, report, total_variation, GridSpec,
    MetricsReport, PercentileMethod,
};
use fairdispatch::simulator::{run, EventLog, SimConfig};
use fairdispatch::workload::{generate_city, CityParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gini_pairwise(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let total: f64 = x.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    for a in x {
        for b in x {
            s += (a - b).abs();
        }
    }
    s / (2.0 * n * total)
}

fn distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() }).collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        let mut d = vec![0.0; n];
        d[0] = 1.0;
        return d;
    }
    raw.iter().map(|v| v / total).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gini_agrees_with_pairwise_and_lorenz_definitions(x in prop::collection::vec(0.0f64..100.0, 1..40)) {
        let g = gini(&x);
        prop_assert!((g - gini_pairwise(&x)).abs() < 1e-9);
        prop_assert!((g - gini_trapezoid(&x)).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&g));
    }

    #[test]
    fn gini_is_scale_and_order_invariant(x in prop::collection::vec(0.01f64..100.0, 2..30), k in 0.01f64..1000.0) {
        let scaled: Vec<f64> = x.iter().map(|v| v * k).collect();
        prop_assert!((gini(&x) - gini(&scaled)).abs() < 1e-9);
        let mut rev = x.clone();
        rev.reverse();
        prop_assert!((gini(&x) - gini(&rev)).abs() < 1e-12);
    }

    #[test]
    fn lorenz_curve_is_monotone_and_below_equality(x in prop::collection::vec(0.0f64..100.0, 1..40)) {
        let pts = lorenz_points(&x);
        prop_assert_eq!(pts.len(), x.len() + 1);
        prop_assert_eq!(pts[0], (0.0, 0.0));
        prop_assert_eq!(pts.last().unwrap().1, 1.0);
        for w in pts.windows(2) {
            prop_assert!(w[1].0 > w[0].0);
            prop_assert!(w[1].1 >= w[0].1 - 1e-12);
        }
        if x.iter().sum::<f64>() > 0.0 {
            for &(p, l) in &pts {
                prop_assert!(l <= p + 1e-9);
            }
        }
    }

    #[test]
    fn nearest_rank_is_the_smallest_covering_value(mut x in prop::collection::vec(0u32..50, 1..30), p in 0.0f64..=100.0) {
        x.sort();
        let v: Vec<f64> = x.iter().map(|&a| a as f64).collect();
        let got = percentile_of(&v, p, PercentileMethod::NearestRank);
        let n = v.len() as f64;
        let want = v
            .iter()
            .enumerate()
            .find(|(i, _)| (*i as f64 + 1.0) / n * 100.0 >= p - 1e-9)
            .map(|(_, &a)| a)
            .unwrap();
        prop_assert_eq!(got, want);
        let lin = percentile_of(&v, p, PercentileMethod::Linear);
        prop_assert!(lin >= v[0] && lin <= v[v.len() - 1]);
    }

    #[test]
    fn period_seconds_match_per_second_count(a in 0u32..200_000, len in 0u32..40_000) {
        let b = a + len;
        let (lunch, dinner, other) = period_seconds(&[(a as f64, b as f64)]);
        let (mut l, mut d) = (0u32, 0u32);
        // count on a 60 s lattice; both intervals and periods are aligned to it
        let a60 = a - a % 60;
        let b60 = b - b % 60;
        let (lunch60, dinner60, _) = period_seconds(&[(a60 as f64, b60 as f64)]);
        for s in (a60..b60).step_by(60) {
            let h = (s % 86_400) / 3600;
            if (11..14).contains(&h) {
                l += 60;
            } else if (19..23).contains(&h) {
                d += 60;
            }
        }
        prop_assert_eq!(lunch60, l as f64);
        prop_assert_eq!(dinner60, d as f64);
        prop_assert!((lunch + dinner + other - len as f64).abs() < 1e-6);
        let s = period_shares(&[(a as f64, b as f64)]);
        if len > 0 {
            prop_assert!((s.lunch + s.dinner + s.other - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn total_variation_is_a_bounded_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..1000 {
        let n = rng.random_range(1..64);
        let (a, b, c) = (distribution(&mut rng, n), distribution(&mut rng, n), distribution(&mut rng, n));
        let ab = total_variation(&a, &b);
        assert!((0.0..=1.0 + 1e-12).contains(&ab));
        assert_eq!(total_variation(&a, &a), 0.0);
        assert!((ab - total_variation(&b, &a)).abs() < 1e-15);
        assert!(ab <= total_variation(&a, &c) + total_variation(&c, &b) + 1e-12);
    }
    assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
}

#[test]
fn report_survives_an_event_log_round_trip() {
    let params = CityParams {
        nodes: 200,
        restaurants: 12,
        vehicles: 24,
        orders_per_hour: 80.0,
        sim_hours: 2.0,
        extent: 3000.0,
        customer_radius: 800.0,
        seed: 9,
        ..CityParams::default()
    };
    let w = generate_city(&params).unwrap();
    let cfg = SimConfig::default();
    let log = run(&w.net, w.orders.clone(), w.vehicles.clone(), cfg).unwrap();
    let pay = PaymentParams::default();
    let grid = GridSpec::for_network(&w.net, GridSpec::DEFAULT_RESOLUTION);
    let before = report(&log, &w.net, &pay, cfg.sla, &grid);

    let mut parsed = EventLog::from_ndjson(&log.to_ndjson()).unwrap();
    parsed.timings = log.timings.clone();
    let after = report(&parsed, &w.net, &pay, cfg.sla, &grid);
    assert_eq!(before, after);
    assert_eq!(before.orders, w.orders.len());
    assert_eq!(before.delivered + before.rejected, before.orders);
    assert!(before.psi_vehicle_loc.is_some_and(|p| (0.0..=1.0).contains(&p)));

    let json = serde_json::to_string(&before).unwrap();
    let back: MetricsReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, before);
}
