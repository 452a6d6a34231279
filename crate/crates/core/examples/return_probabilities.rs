//! Decay of p_n(0), the series sum n p_n(0) and the error-scaling regime.

use rangecap::green::{pn_at_origin, return_moment_partial_sum, Asymptotics};
use rangecap::numerics::linear_fit;
use rangecap::walk::WalkModel;

fn main() {
    for (alpha, d) in [(0.8, 3), (1.1, 3), (1.5, 3)] {
        let m = WalkModel::subordinate(d, alpha).unwrap();
        let ns: Vec<u64> = (0..10).map(|i| (50.0 * 10f64.powf(i as f64 / 9.0)) as u64).collect();
        let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        let y: Vec<f64> = ns.iter().map(|&n| pn_at_origin(&m, n).ln()).collect();
        let (slope, _, _) = linear_fit(&x, &y);
        let s3 = return_moment_partial_sum(&m, 1000);
        let s4 = return_moment_partial_sum(&m, 10_000);
        let regime = Asymptotics::new(alpha, d).regime();
        println!(
            "alpha {alpha} d {d}: slope {slope:.3} (-d/alpha = {:.3}), sum n p_n(0) to 1e3 {s3:.4}, to 1e4 {s4:.4}, regime {regime:?}",
            -(d as f64) / alpha
        );
    }
}
