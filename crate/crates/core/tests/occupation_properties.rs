mod common;

use std::sync::Arc;

use occflow::occupation::{make_grid, DiscreteOccupation, LocalTimeQuery, MetricOrder};
use proptest::prelude::*;

#[test]
fn thousand_random_instances() {
    let failures: Vec<String> = (0..1000).filter_map(|s| common::check_instance(s).err()).collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

fn occupation(levels: &[f64], weights: &[f64]) -> DiscreteOccupation {
    let mut o = DiscreteOccupation::new(Arc::new(make_grid(0.0, 2.0, 41).unwrap()));
    for (x, w) in levels.iter().zip(weights) {
        o.accumulate(*x, *w).unwrap();
    }
    o
}

proptest! {
    #[test]
    fn corridor_mass_is_additive_and_bounded(
        levels in prop::collection::vec(-3.0f64..3.0, 1..50),
        cut in -2.5f64..2.5,
        width in 0.0f64..2.0,
    ) {
        let w = vec![0.25; levels.len()];
        let o = occupation(&levels, &w);
        let (lo, hi) = (cut - width, cut + width);
        let total = o.mass_in(lo, hi);
        let split = o.mass_in(lo, cut) + o.mass_in(cut, hi);
        prop_assert!((total - split).abs() <= 1e-12);
        prop_assert!(total >= 0.0 && total <= o.total_mass() + 1e-12);
        prop_assert_eq!(o.mass_in(f64::NEG_INFINITY, f64::INFINITY), o.total_mass());
    }

    #[test]
    fn local_time_is_corridor_mass_over_width(
        levels in prop::collection::vec(-1.0f64..1.0, 1..50),
        x in -1.0f64..1.0,
        eps in 0.01f64..0.5,
    ) {
        let w = vec![0.1; levels.len()];
        let o = occupation(&levels, &w);
        let lt = o.local_time(&LocalTimeQuery::new(x, eps).unwrap());
        prop_assert!((lt * 2.0 * eps - o.mass_in(x - eps, x + eps)).abs() <= 1e-12);
    }

    #[test]
    fn metrics_are_symmetric_and_vanish_on_the_diagonal(
        a in prop::collection::vec(-2.0f64..2.0, 1..30),
        b in prop::collection::vec(-2.0f64..2.0, 1..30),
    ) {
        let oa = occupation(&a, &vec![0.5; a.len()]);
        let ob = occupation(&b, &vec![0.5; b.len()]);
        for order in [MetricOrder::One, MetricOrder::Infinity] {
            prop_assert_eq!(oa.metric(&oa, order).unwrap(), 0.0);
            prop_assert!((oa.metric(&ob, order).unwrap() - ob.metric(&oa, order).unwrap()).abs() < 1e-12);
        }
    }
}
