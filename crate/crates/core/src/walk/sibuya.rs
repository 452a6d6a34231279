//! The Sibuya law: the jump distribution of the discrete subordinator with
//! Bernstein function `psi(lambda) = lambda^gamma`.
//!
//! Its generating function is `1 - (1 - s)^gamma`, so `P(eta = 1) = gamma`,
//! `p_{k+1} = p_k (k - gamma) / (k + 1)` and `P(eta > k) = prod_{i<=k} (1 - gamma/i)`.
//! The tail decays like `k^-gamma / Gamma(1 - gamma)`; the mean is infinite.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Number of tail values kept in the table; beyond it the tail is evaluated
/// by an asymptotic expansion of a log-gamma difference.
pub const CACHE_LEN: usize = 10_000;

/// Draws at or above this size are returned as [`SibuyaDraw::Huge`].
pub const HUGE_DRAW: u64 = 1 << 60;

pub fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!(
            "Sibuya parameter must lie in (0, 1), got {gamma}"
        )));
    }
    Ok(())
}

/// `P(eta = k)` for the Sibuya(gamma) law.
pub fn sibuya_pmf(gamma: f64, k: u64) -> Result<f64> {
    check_gamma(gamma)?;
    if k == 0 {
        return Err(Error::Domain("Sibuya law lives on k >= 1".into()));
    }
    if (k as usize) <= CACHE_LEN {
        let mut p = gamma;
        for i in 1..k {
            p *= (i as f64 - gamma) / (i as f64 + 1.0);
        }
        Ok(p)
    } else {
        Ok(ln_tail_asymptotic(gamma, k - 1).exp() * gamma / k as f64)
    }
}

// Bernoulli polynomials B_2 .. B_7.
fn bernoulli_poly(n: usize, x: f64) -> f64 {
    let x2 = x * x;
    let x3 = x2 * x;
    match n {
        2 => x2 - x + 1.0 / 6.0,
        3 => x3 - 1.5 * x2 + 0.5 * x,
        4 => x2 * x2 - 2.0 * x3 + x2 - 1.0 / 30.0,
        5 => x3 * x2 - 2.5 * x2 * x2 + 5.0 / 3.0 * x3 - x / 6.0,
        6 => x3 * x3 - 3.0 * x3 * x2 + 2.5 * x2 * x2 - 0.5 * x2 + 1.0 / 42.0,
        7 => x3 * x3 * x - 3.5 * x3 * x3 + 3.5 * x3 * x2 - 7.0 / 6.0 * x3 + x / 6.0,
        _ => unreachable!(),
    }
}

/// `ln Gamma(x + a) - ln Gamma(x + b)` for large `x`, without the
/// cancellation a direct difference of log-gammas suffers.
pub fn ln_gamma_ratio_asymptotic(x: f64, a: f64, b: f64) -> f64 {
    let mut s = (a - b) * x.ln();
    let mut xp = 1.0;
    for n in 1..=6usize {
        xp *= x;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let num = bernoulli_poly(n + 1, a) - bernoulli_poly(n + 1, b);
        s += sign * num / ((n * (n + 1)) as f64 * xp);
    }
    s
}

/// `ln P(eta > k) = ln Gamma(k + 1 - gamma) - ln Gamma(1 - gamma) - ln Gamma(k + 1)`,
/// accurate for `k` beyond a few hundred.
pub fn ln_tail_asymptotic(gamma: f64, k: u64) -> f64 {
    ln_gamma_ratio_asymptotic(k as f64, 1.0 - gamma, 1.0) - ln_gamma(1.0 - gamma)
}

/// A draw of the subordinator jump. Astronomically large draws (probability
/// below `HUGE_DRAW^-gamma`) keep only their magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SibuyaDraw {
    Exact(u64),
    Huge(f64),
}

impl SibuyaDraw {
    pub fn as_f64(self) -> f64 {
        match self {
            SibuyaDraw::Exact(k) => k as f64,
            SibuyaDraw::Huge(k) => k,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Sibuya {
    gamma: f64,
    pmf: Vec<f64>,
    tail: Vec<f64>,
    ln_gamma_1mg: f64,
}

impl Sibuya {
    pub fn new(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let mut pmf = vec![0.0; CACHE_LEN + 1];
        let mut tail = vec![1.0; CACHE_LEN + 1];
        pmf[1] = gamma;
        tail[1] = 1.0 - gamma;
        for k in 2..=CACHE_LEN {
            let kf = k as f64;
            pmf[k] = pmf[k - 1] * (kf - 1.0 - gamma) / kf;
            tail[k] = tail[k - 1] * (1.0 - gamma / kf);
        }
        Ok(Sibuya {
            gamma,
            pmf,
            tail,
            ln_gamma_1mg: ln_gamma(1.0 - gamma),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn pmf(&self, k: u64) -> f64 {
        match k {
            0 => 0.0,
            k if (k as usize) <= CACHE_LEN => self.pmf[k as usize],
            k => self.tail(k - 1) * self.gamma / k as f64,
        }
    }

    /// `P(eta > k)`.
    pub fn tail(&self, k: u64) -> f64 {
        if (k as usize) <= CACHE_LEN {
            self.tail[k as usize]
        } else {
            self.ln_tail(k).exp()
        }
    }

    fn ln_tail(&self, k: u64) -> f64 {
        ln_gamma_ratio_asymptotic(k as f64, 1.0 - self.gamma, 1.0) - self.ln_gamma_1mg
    }

    /// Inversion of the tail: the smallest `k` with `P(eta > k) < u`.
    pub fn invert(&self, u: f64) -> SibuyaDraw {
        debug_assert!(u > 0.0 && u <= 1.0);
        // tail is strictly decreasing, tail[0] = 1 >= u.
        let k = self.tail.partition_point(|&t| t >= u);
        if k <= CACHE_LEN {
            return SibuyaDraw::Exact(k as u64);
        }
        let lu = u.ln();
        let mut lo = CACHE_LEN as u64; // ln_tail(lo) >= lu
        let mut hi = lo * 2;
        while self.ln_tail(hi) >= lu {
            lo = hi;
            hi *= 2;
            if hi >= HUGE_DRAW {
                // P(eta > k) ~ k^-gamma / Gamma(1 - gamma) to relative O(1/k).
                let k = ((-self.ln_gamma_1mg - lu) / self.gamma).exp();
                return SibuyaDraw::Huge(k.max(HUGE_DRAW as f64));
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.ln_tail(mid) >= lu {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        SibuyaDraw::Exact(hi)
    }

    pub fn sample(&self, rng: &mut RngStream) -> SibuyaDraw {
        self.invert(rng.uniform_open0())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, StreamId};

    #[test]
    fn pmf_values() {
        assert!((sibuya_pmf(0.4, 1).unwrap() - 0.4).abs() < 1e-15);
        assert!((sibuya_pmf(0.4, 2).unwrap() - 0.12).abs() < 1e-15);
        assert!((sibuya_pmf(0.5, 3).unwrap() - 0.0625).abs() < 1e-15);
        assert!(sibuya_pmf(1.0, 1).is_err());
        assert!(sibuya_pmf(0.0, 1).is_err());
        assert!(sibuya_pmf(0.3, 0).is_err());
    }

    #[test]
    fn pmf_and_tail_are_consistent() {
        for gamma in [0.05, 0.4, 0.5, 0.55, 0.95] {
            let s = Sibuya::new(gamma).unwrap();
            let mut acc = 0.0;
            for k in 1..=CACHE_LEN as u64 {
                acc += s.pmf(k);
                if k % 97 == 0 || k == CACHE_LEN as u64 {
                    assert!((acc + s.tail(k) - 1.0).abs() < 1e-12, "gamma={gamma} k={k}");
                }
            }
        }
    }

    #[test]
    fn asymptotic_tail_matches_product() {
        for gamma in [0.1, 0.4, 0.8] {
            let s = Sibuya::new(gamma).unwrap();
            for k in [500u64, 2_000, CACHE_LEN as u64] {
                let direct = s.tail[k as usize].ln();
                let asym = ln_tail_asymptotic(gamma, k);
                assert!((direct - asym).abs() < 1e-11, "gamma={gamma} k={k}");
            }
            // continuity across the cache boundary
            let k = CACHE_LEN as u64;
            let ratio = s.tail(k + 1) / s.tail(k);
            assert!((ratio - (1.0 - gamma / (k + 1) as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn inversion_from_the_top_gives_one() {
        let s = Sibuya::new(0.4).unwrap();
        assert_eq!(s.invert(0.61), SibuyaDraw::Exact(1));
        assert_eq!(s.invert(1.0), SibuyaDraw::Exact(1));
        assert_eq!(s.invert(0.6), SibuyaDraw::Exact(2));
    }

    #[test]
    fn inversion_beyond_the_cache_is_exact() {
        let s = Sibuya::new(0.4).unwrap();
        for u in [1e-3, 1e-5, 1e-6] {
            match s.invert(u) {
                SibuyaDraw::Exact(k) => {
                    assert!(s.tail(k) < u && s.tail(k - 1) >= u, "u={u} k={k}");
                }
                SibuyaDraw::Huge(_) => panic!("unexpected huge draw"),
            }
        }
        assert!(matches!(s.invert(1e-300), SibuyaDraw::Huge(_)));
    }

    #[test]
    fn tail_exponent_of_samples() {
        let gamma = 0.4;
        let s = Sibuya::new(gamma).unwrap();
        let mut rng = RngStream::new(5, StreamId::new(Purpose::Test, 0));
        let m = 400_000;
        let draws: Vec<f64> = (0..m).map(|_| s.sample(&mut rng).as_f64()).collect();
        let ks = [10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 10_000.0];
        let xs: Vec<f64> = ks.iter().map(|k: &f64| k.ln()).collect();
        let ys: Vec<f64> = ks
            .iter()
            .map(|&k| (draws.iter().filter(|&&v| v > k).count() as f64 / m as f64).ln())
            .collect();
        let (slope, _, _) = crate::numerics::linear_fit(&xs, &ys);
        assert!((slope + gamma).abs() < 0.05, "slope {slope}");
    }
}
