//! Small statistics toolkit: moments, jackknife errors, Anderson-Darling with
//! a parametric bootstrap, two-sample chi-square.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::numerics::compensated_sum;
use crate::rng::{Purpose, RngStream, StreamId};

pub fn mean(xs: &[f64]) -> f64 {
    compensated_sum(xs.iter().copied()) / xs.len() as f64
}

/// Unbiased sample variance (zero for fewer than two values).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    compensated_sum(xs.iter().map(|x| (x - m) * (x - m))) / (xs.len() - 1) as f64
}

/// Mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    (mean(xs), (variance(xs) / xs.len() as f64).sqrt())
}

/// Central moment of order `k` about the sample mean.
pub fn central_moment(xs: &[f64], k: i32) -> f64 {
    let m = mean(xs);
    compensated_sum(xs.iter().map(|x| (x - m).powi(k))) / xs.len() as f64
}

/// Moment skewness `m3 / m2^1.5`.
pub fn skewness(xs: &[f64]) -> f64 {
    let m2 = central_moment(xs, 2);
    if m2 == 0.0 {
        return 0.0;
    }
    central_moment(xs, 3) / m2.powf(1.5)
}

/// Moment excess kurtosis `m4 / m2^2 - 3`.
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let m2 = central_moment(xs, 2);
    if m2 == 0.0 {
        return 0.0;
    }
    central_moment(xs, 4) / (m2 * m2) - 3.0
}

/// Delete-one jackknife standard error of `stat`.
pub fn jackknife_se<F: Fn(&[f64]) -> f64 + Sync>(xs: &[f64], stat: F) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let loo: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut v = Vec::with_capacity(n - 1);
            v.extend_from_slice(&xs[..i]);
            v.extend_from_slice(&xs[i + 1..]);
            stat(&v)
        })
        .collect();
    let m = mean(&loo);
    let ss = compensated_sum(loo.iter().map(|v| (v - m) * (v - m)));
    ((n - 1) as f64 / n as f64 * ss).sqrt()
}

#[inline]
fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Anderson-Darling statistic `A^2` of a sample against the normal law with
/// the sample's own mean and standard deviation.
pub fn anderson_darling(xs: &[f64]) -> f64 {
    let n = xs.len();
    let m = mean(xs);
    let sd = variance(xs).sqrt();
    if sd == 0.0 {
        return f64::INFINITY;
    }
    let mut z: Vec<f64> = xs.iter().map(|x| (x - m) / sd).collect();
    z.sort_by(f64::total_cmp);
    let nf = n as f64;
    let s = compensated_sum((0..n).map(|i| {
        let f = normal_cdf(z[i]).clamp(1e-300, 1.0 - 1e-16);
        let g = normal_cdf(z[n - 1 - i]).clamp(1e-300, 1.0 - 1e-16);
        (2 * i + 1) as f64 * (f.ln() + (1.0 - g).ln())
    }));
    -nf - s / nf
}

/// `A^2` and its p-value under the Gaussian null. Parameters are estimated
/// in each replicate exactly as for the data, so the bootstrap distribution
/// accounts for the estimation. Replicate `b` uses stream `(Bootstrap, b)`.
pub fn anderson_darling_bootstrap(xs: &[f64], replicates: u32, seed: u64) -> (f64, f64) {
    let a2 = anderson_darling(xs);
    let n = xs.len();
    let exceed: usize = (0..replicates as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::new(seed, StreamId::new(Purpose::Bootstrap, b));
            let sample: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            usize::from(anderson_darling(&sample) >= a2)
        })
        .sum();
    (a2, (1 + exceed) as f64 / (replicates as f64 + 1.0))
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Two-sample chi-square test of homogeneity on binned counts. Adjacent bins
/// are merged (in the given order) until each pooled bin has an expected
/// count of at least 5 in both samples.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquareResult {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let (fa, fb) = (na as f64, nb as f64);
    let total = fa + fb;
    let min_pooled = 5.0 * total / fa.min(fb).max(1.0);
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut cur = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cur.0 += *x as f64;
        cur.1 += *y as f64;
        if cur.0 + cur.1 >= min_pooled {
            bins.push(cur);
            cur = (0.0, 0.0);
        }
    }
    if cur.0 + cur.1 > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += cur.0;
                last.1 += cur.1;
            }
            None => bins.push(cur),
        }
    }
    if bins.len() < 2 {
        return ChiSquareResult {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
        };
    }
    let ka = (fb / fa).sqrt();
    let kb = (fa / fb).sqrt();
    let statistic = compensated_sum(bins.iter().map(|(x, y)| {
        let diff = ka * x - kb * y;
        diff * diff / (x + y)
    }));
    let df = bins.len() - 1;
    let p_value = 1.0 - ChiSquared::new(df as f64).expect("positive df").cdf(statistic);
    ChiSquareResult {
        statistic,
        df,
        p_value,
    }
}

/// Histogram with `bins` equal-width bins over the sample range.
pub fn histogram(xs: &[f64], bins: usize) -> Vec<(f64, f64, u64)> {
    if xs.is_empty() {
        return Vec::new();
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0u64; bins];
    for x in xs {
        let i = (((x - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

/// Points `(theoretical, sample)` of a normal quantile-quantile plot of the
/// standardized sample.
pub fn normal_qq(xs: &[f64]) -> Vec<(f64, f64)> {
    let m = mean(xs);
    let sd = variance(xs).sqrt().max(f64::MIN_POSITIVE);
    let mut z: Vec<f64> = xs.iter().map(|x| (x - m) / sd).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    z.into_iter()
        .enumerate()
        .map(|(i, v)| (normal_quantile((i as f64 + 0.5) / n), v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_a_small_sample() {
        let xs = [1.0, 2.0, 3.0, 4.0, 10.0];
        assert_eq!(mean(&xs), 4.0);
        assert!((variance(&xs) - 12.5).abs() < 1e-12);
        // m2 = 10, m3 = 7.2 * ... computed by hand: deviations -3,-2,-1,0,6
        assert!((central_moment(&xs, 3) - (-27.0 - 8.0 - 1.0 + 216.0) / 5.0).abs() < 1e-12);
        assert!((skewness(&xs) - 36.0 / 10f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn jackknife_of_the_mean_is_the_usual_error() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        let (_, se) = mean_se(&xs);
        assert!((jackknife_se(&xs, mean) - se).abs() < 1e-12);
    }

    #[test]
    fn chi_square_identical_samples() {
        let r = chi_square_two_sample(&[10, 20, 30, 40], &[10, 20, 30, 40]);
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        let r = chi_square_two_sample(&[100, 0], &[0, 100]);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn anderson_darling_of_normal_scores_is_small() {
        let xs: Vec<f64> = (0..200).map(|i| normal_quantile((i as f64 + 0.5) / 200.0)).collect();
        assert!(anderson_darling(&xs) < 0.1);
    }
}
