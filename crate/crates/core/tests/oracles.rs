//! Reference values computed independently of the library code paths they
//! check: closed forms, hand enumeration and a second linear algebra stack.

use nalgebra::{DMatrix, DVector};
use rangecap::capacity::{
    capacity_exact, check_decomposition, escape_prob_mc, occupation_lower_bound, HorizonSchedule,
};
use rangecap::green::{
    default_table, fourier, occupation::build_occupation, pn_at_origin, renewal::build_renewal,
};
use rangecap::walk::{sibuya_pmf, LatticePath, WalkModel};
use rangecap::{RngStream, Site};
use rand::Rng;
use statrs::function::gamma::gamma;

fn s3(x: i64, y: i64, z: i64) -> Site {
    Site::from_coords(&[x, y, z]).unwrap()
}

/// Watson's closed form for the return Green function of the simple walk.
fn watson() -> f64 {
    let pi = std::f64::consts::PI;
    6f64.sqrt() / (32.0 * pi.powi(3))
        * gamma(1.0 / 24.0)
        * gamma(5.0 / 24.0)
        * gamma(7.0 / 24.0)
        * gamma(11.0 / 24.0)
}

#[test]
fn sibuya_pmf_matches_series_coefficients() {
    assert!((sibuya_pmf(0.4, 2).unwrap() - 0.12).abs() < 1e-15);
    assert!((sibuya_pmf(0.5, 3).unwrap() - 0.0625).abs() < 1e-15);
    // Coefficients of 1 - (1 - s)^g from the binomial series.
    for g in [0.1, 0.4, 0.55, 0.9] {
        let mut binom = 1.0;
        for k in 1..=40u64 {
            binom *= (g - (k - 1) as f64) / k as f64;
            let coef = -binom * if k % 2 == 0 { 1.0 } else { -1.0 };
            let p = sibuya_pmf(g, k).unwrap();
            assert!((p - coef).abs() < 1e-13 * coef.abs().max(1e-3), "g {g} k {k}: {p} vs {coef}");
        }
    }
}

#[test]
fn characteristic_function_at_the_corner() {
    let m = WalkModel::subordinate(1, 1.0).unwrap();
    let phi = m.charfn(&[std::f64::consts::PI]);
    assert!((phi - (1.0 - 2f64.sqrt())).abs() < 1e-12, "{phi}");
}

#[test]
fn two_step_return_probabilities() {
    assert!((pn_at_origin(&WalkModel::simple(1).unwrap(), 2) - 0.5).abs() < 1e-12);
    assert!((pn_at_origin(&WalkModel::simple(3).unwrap(), 2) - 1.0 / 6.0).abs() < 1e-12);
    assert!(pn_at_origin(&WalkModel::simple(3).unwrap(), 3).abs() < 1e-12);
}

#[test]
fn simple_walk_green_function_at_origin() {
    let g = watson();
    assert!((g - 1.516_386_059_151_978).abs() < 1e-12);
    let m = WalkModel::simple(3).unwrap();
    let r = build_renewal(&m, 2, 8192).unwrap();
    assert!((r.origin() - g).abs() < 1e-4, "renewal {}", r.origin());
    let f = fourier::build_fourier(&m, 8, 128).unwrap();
    assert!((f.origin() - g).abs() < 1e-3, "fourier {}", f.origin());
}

#[test]
fn fourier_and_occupation_backends_agree() {
    let m = WalkModel::subordinate(3, 0.8).unwrap();
    let f = default_table(&m, 5).unwrap();
    let o = build_occupation(&m, 5, 200_000, 256, 11).unwrap();
    let mut worst: f64 = 0.0;
    for x in -5..=5 {
        for y in 0..=5 {
            for z in 0..=y {
                let site = s3(x, y, z);
                let se = o.std_err_at(&site).unwrap().max(1e-9);
                worst = worst.max((f.at(&site) - o.at(&site)).abs() / se);
            }
        }
    }
    // 396 comparisons; 4.5 sigma keeps the family-wise false alarm rate low.
    assert!(worst < 4.5, "largest deviation {worst} sigma");
}

#[test]
fn far_field_extrapolation_matches_a_larger_window() {
    let m = WalkModel::subordinate(3, 0.8).unwrap();
    let small = default_table(&m, 8).unwrap();
    let large = default_table(&m, 16).unwrap();
    for x in [s3(16, 0, 0), s3(16, 16, 0), s3(16, 9, 4), s3(16, 16, 16)] {
        let rel = (small.at(&x) - large.at(&x)).abs() / large.at(&x);
        assert!(rel < 0.05, "{x:?}: {} vs {}", small.at(&x), large.at(&x));
    }
}

#[test]
fn capacity_closed_forms() {
    let m = WalkModel::subordinate(3, 0.8).unwrap();
    let t = default_table(&m, 8).unwrap();
    let g0 = t.origin();
    let one = capacity_exact(&[Site::ORIGIN], &t).unwrap().0.value;
    assert!((one - 1.0 / g0).abs() < 1e-12);
    for x in [s3(1, 0, 0), s3(2, 3, 1), s3(40, 0, 0)] {
        let gx = t.at(&x);
        let two = capacity_exact(&[Site::ORIGIN, x], &t).unwrap();
        assert!((two.0.value - 2.0 / (g0 + gx)).abs() < 1e-12);
        for e in &two.1.escape {
            assert!((e - 1.0 / (g0 + gx)).abs() < 1e-12);
        }
        let dec = check_decomposition(&[Site::ORIGIN], &[x], &t).unwrap();
        let lower = 2.0 / (g0 + gx) - 2.0 / g0 + 2.0 * gx;
        assert!((dec.lower_slack - lower).abs() < 1e-12);
        assert!(lower >= 0.0);
    }
}

#[test]
fn capacity_agrees_with_an_independent_solver() {
    let m = WalkModel::subordinate(3, 0.8).unwrap();
    let t = default_table(&m, 8).unwrap();
    let mut rng = RngStream::new(5, rangecap::StreamId::new(rangecap::Purpose::Test, 0));
    for _ in 0..30 {
        let k = rng.random_range(1..=24);
        let mut sites: Vec<Site> = Vec::new();
        while sites.len() < k {
            let x = s3(rng.random_range(-6..=6), rng.random_range(-6..=6), rng.random_range(-6..=6));
            if !sites.contains(&x) {
                sites.push(x);
            }
        }
        let g = DMatrix::from_fn(k, k, |i, j| t.between(&sites[i], &sites[j]));
        let e = g.cholesky().unwrap().solve(&DVector::from_element(k, 1.0));
        let (cap, eq) = capacity_exact(&sites, &t).unwrap();
        assert!((cap.value - e.sum()).abs() < 1e-10 * e.sum());
        for (a, b) in eq.escape.iter().zip(e.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn alternating_path_occupation_bound_is_two_point_capacity() {
    let m = WalkModel::subordinate(3, 0.8).unwrap();
    let t = default_table(&m, 8).unwrap();
    let x = s3(1, 1, 0);
    let pos: Vec<Site> = (0..=40).map(|k| if k % 2 == 0 { Site::ORIGIN } else { x }).collect();
    let path = LatticePath::from_positions(3, pos, None);
    let ob = occupation_lower_bound(&path, &t).unwrap().value;
    let exact = 2.0 / (t.origin() + t.at(&x));
    assert!((ob - exact).abs() < 1e-12, "{ob} vs {exact}");
}

#[test]
fn escape_probability_of_the_origin() {
    let m = WalkModel::subordinate(3, 0.8).unwrap();
    let t = default_table(&m, 8).unwrap();
    let e = escape_prob_mc(&[Site::ORIGIN], &Site::ORIGIN, &m, HorizonSchedule::default(), 100_000, 3, 0).unwrap();
    let exact = 1.0 / t.origin();
    assert!((e.value - exact).abs() < 3.0 * e.std_err, "{} +- {} vs {exact}", e.value, e.std_err);
    assert!(!e.flagged);
}
