//! Parametric-bootstrap Anderson-Darling test on normal and skewed samples.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rangecap::experiments::clt_statistics;
use rangecap::{Purpose, RngStream, StreamId};

fn main() {
    let mut rng = RngStream::new(4, StreamId::new(Purpose::Synthetic, 0));
    let normal: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let expo: Vec<f64> = (0..2000).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    for (name, xs) in [("normal", &normal), ("exponential", &expo)] {
        let s = clt_statistics(xs, 2000, 9);
        println!(
            "{name:12} skew {:+.3} kurt {:+.3} A2 {:.3} p {:.4}",
            s.skewness, s.excess_kurtosis, s.anderson_darling, s.p_value
        );
    }
}
