use dustwalk::observables::{percolative_r, script_r_max_form, script_r_min_form};
use proptest::prelude::*;

/// Strictly decreasing labels from `y` down to `0`, on a dyadic grid so that
/// every comparison in the three forms is exact.
fn labels() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(1u32..4000, 1..40).prop_map(|set| {
        let mut v: Vec<f64> = set.into_iter().map(|i| i as f64 / 8.0).collect();
        v.reverse();
        v.push(0.0);
        v
    })
}

/// Independent brute force: scan the uncovered part of `(2 min, 0]` on a grid
/// finer than the input grid.
fn uncovered_brute(points: &[f64]) -> f64 {
    let lo = 2.0 * points.iter().cloned().fold(0.0, f64::min);
    let step = 1.0 / 32.0;
    let mut best = 0.0;
    let mut t = -step / 2.0;
    while t > lo {
        if !points.iter().any(|&x| 2.0 * x <= t && t <= x) {
            best = t;
        }
        t -= step / 2.0;
    }
    if best == 0.0 {
        return 0.0;
    }
    // uncovered gaps are open intervals whose lower edge is a point of the set
    -points.iter().cloned().filter(|&x| x < best).fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn max_and_min_forms_agree(l in labels()) {
        let a = script_r_max_form(&l).unwrap();
        let b = script_r_min_form(&l).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a > 0.0 && a <= l[0]);
    }

    #[test]
    fn percolative_form_matches_shifted_labels(l in labels()) {
        let y = l[0];
        let shifted: Vec<f64> = l.iter().map(|z| z - y).collect();
        prop_assert_eq!(percolative_r(&shifted).unwrap(), script_r_max_form(&l).unwrap());
    }

    #[test]
    fn percolative_form_matches_grid_scan(l in labels()) {
        let y = l[0];
        let shifted: Vec<f64> = l.iter().map(|z| z - y).collect();
        prop_assert_eq!(percolative_r(&shifted).unwrap(), uncovered_brute(&shifted));
    }

    #[test]
    fn percolative_is_order_insensitive(l in labels(), rot in 0usize..40) {
        let y = l[0];
        let mut shifted: Vec<f64> = l.iter().map(|z| z - y).collect();
        let base = percolative_r(&shifted).unwrap();
        let r = rot % shifted.len();
        shifted.rotate_left(r);
        prop_assert_eq!(percolative_r(&shifted).unwrap(), base);
    }
}
