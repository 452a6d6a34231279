use std::sync::OnceLock;

use proptest::prelude::*;
use rangecap::capacity::{capacity_exact, check_decomposition, energy};
use rangecap::green::{default_table, GreenTable};
use rangecap::range::{dyadic_check, range_capacities, range_of, segment_sites};
use rangecap::walk::{insert_loops, sample_path, WalkModel};
use rangecap::{Purpose, RngStream, Site, StreamId};

fn model() -> &'static WalkModel {
    static M: OnceLock<WalkModel> = OnceLock::new();
    M.get_or_init(|| WalkModel::subordinate(3, 0.8).unwrap())
}

fn table() -> &'static GreenTable {
    static T: OnceLock<GreenTable> = OnceLock::new();
    T.get_or_init(|| default_table(model(), 8).unwrap())
}

fn site() -> impl Strategy<Value = Site> {
    (-12i64..=12, -12i64..=12, -12i64..=12).prop_map(|(x, y, z)| Site::from_coords(&[x, y, z]).unwrap())
}

fn set(max: usize) -> impl Strategy<Value = Vec<Site>> {
    prop::collection::vec(site(), 1..=max).prop_map(|mut v| {
        v.sort_by_key(|s| *s.raw());
        v.dedup();
        v
    })
}

fn cap(a: &[Site]) -> f64 {
    capacity_exact(a, table()).unwrap().0.value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn equilibrium_measure_minimizes_energy(a in set(12), w in prop::collection::vec(0.0f64..1.0, 12)) {
        let (c, eq) = capacity_exact(&a, table()).unwrap();
        let nu: Vec<f64> = w[..a.len()].iter().map(|v| v + 1e-3).collect();
        let mass: f64 = nu.iter().sum();
        let nu: Vec<f64> = nu.iter().map(|v| v / mass).collect();
        prop_assert!(energy(table(), &a, &nu) >= 1.0 / c.value - 1e-8);
        let opt: Vec<f64> = eq.escape.iter().map(|e| e / c.value).collect();
        prop_assert!((energy(table(), &eq.sites, &opt) - 1.0 / c.value).abs() < 1e-8);
    }

    #[test]
    fn capacity_is_monotone(a in set(10), b in set(10)) {
        let mut u = a.clone();
        u.extend(&b);
        prop_assert!(cap(&a) <= cap(&u) + 1e-10);
    }

    #[test]
    fn capacity_is_translation_invariant(a in set(10), v in site()) {
        let shifted: Vec<Site> = a.iter().map(|x| x.checked_add(&v).unwrap()).collect();
        prop_assert!((cap(&a) - cap(&shifted)).abs() < 1e-10 * cap(&a));
    }

    #[test]
    fn capacity_is_subadditive_and_bounded(a in set(10)) {
        let c = cap(&a);
        prop_assert!(c <= a.len() as f64 / table().origin() + 1e-10);
        prop_assert!(c >= 1.0 / table().origin() - 1e-12);
    }

    #[test]
    fn union_bounds_hold(a in set(10), b in set(10)) {
        let d = check_decomposition(&a, &b, table()).unwrap();
        prop_assert!(d.lower_slack >= -1e-8);
        prop_assert!(d.upper_slack >= -1e-8);
    }

    #[test]
    fn one_level_dyadic_check_is_the_set_decomposition(index in 0u64..1000, n in 8usize..200) {
        let mut rng = RngStream::new(9, StreamId::new(Purpose::Test, index));
        let path = sample_path(model(), n, &mut rng).unwrap();
        let check = dyadic_check(&path, n, 1, table()).unwrap();
        let left = segment_sites(&path, 0, n / 2);
        let right = segment_sites(&path, n / 2, n);
        let d = check_decomposition(left.sites(), right.sites(), table()).unwrap();
        prop_assert!((check.lower_slack - d.lower_slack).abs() < 1e-8);
        prop_assert!((check.upper_slack - (d.upper_slack + d.cap_intersection)).abs() < 1e-8);
    }

    #[test]
    fn range_capacity_grows_along_a_path(index in 0u64..1000) {
        let mut rng = RngStream::new(10, StreamId::new(Purpose::Test, index));
        let path = sample_path(model(), 128, &mut rng).unwrap();
        let horizons: Vec<usize> = (0..=128).step_by(8).collect();
        let caps = range_capacities(&path, &horizons, table()).unwrap();
        for w in caps.windows(2) {
            prop_assert!(w[0].value <= w[1].value + 1e-8);
        }
        let direct = cap(range_of(&path, 0, 128).unwrap().sites());
        prop_assert!((caps.last().unwrap().value - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn loop_insertion_preserves_ranges(index in 0u64..1000, p in 0.0f64..0.9) {
        let lf = model().loop_free().unwrap();
        let mut rng = RngStream::new(12, StreamId::new(Purpose::Test, index));
        let tilde = sample_path(&lf, 40, &mut rng).unwrap();
        let (hat, rec) = insert_loops(&tilde, p, &mut rng).unwrap();
        prop_assert!(rangecap::experiments::coupled_ranges_agree(&tilde, &hat, &rec));
    }
}
