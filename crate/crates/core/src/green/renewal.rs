//! Green function as a renewal series over the simple walk.
//!
//! For `S_n = Z_{T_n}` with `T` a renewal process of jump law `f`,
//! `G_S(x) = sum_k u(k) p^Z_k(x)` where `u` is the renewal mass function,
//! `u(0) = 1`, `u(k) = sum_j f(j) u(k - j)`. For the Sibuya law
//! `sum_k u(k) s^k = (1 - s)^-gamma`, so `u(k) = u(k-1) (k - 1 + gamma) / k`;
//! the simple walk is the case `u = 1`.
//!
//! The series is truncated at `K` terms and its tail, which decays like a
//! power of `K`, is removed by Richardson extrapolation on the partial sums
//! at `K/4, K/2, K`.

use rayon::prelude::*;

use super::table::{GreenMethod, GreenTable, SymmetricWindow, TableMeta};
use crate::error::{Error, Result};
use crate::walk::{Derived, WalkModel};

/// `ln k!` for `k <= n`.
fn log_factorials(n: usize) -> Vec<f64> {
    let mut lf = vec![0.0; n + 1];
    for k in 1..=n {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    lf
}

struct SimpleWalkKernel {
    d: usize,
    lf: Vec<f64>,
}

impl SimpleWalkKernel {
    /// `P(Z_m = y)` for the one-dimensional simple walk.
    fn q(&self, m: usize, y: i64) -> f64 {
        let ya = y.unsigned_abs() as usize;
        if ya > m || (m + ya) % 2 == 1 {
            return 0.0;
        }
        let up = (m + ya) / 2;
        (self.lf[m] - self.lf[up] - self.lf[m - up] - m as f64 * std::f64::consts::LN_2).exp()
    }

    /// `P(Z_k = x)` in dimension `dim` (using the first `dim` coordinates).
    fn p(&self, dim: usize, k: usize, x: &[i64]) -> f64 {
        match dim {
            1 => self.q(k, x[0]),
            2 => self.q(k, x[0] + x[1]) * self.q(k, x[0] - x[1]),
            _ => {
                // j of the k steps move the last coordinate.
                let pj = 1.0 / dim as f64;
                let mean = k as f64 * pj;
                let sd = (k as f64 * pj * (1.0 - pj)).sqrt();
                let lo = (mean - 12.0 * sd - 2.0).floor().max(0.0) as usize;
                let hi = ((mean + 12.0 * sd + 2.0).ceil() as usize).min(k);
                let last = x[dim - 1];
                let lpj = pj.ln();
                let lqj = (1.0 - pj).ln();
                let mut s = 0.0;
                for j in lo..=hi {
                    let qj = self.q(j, last);
                    if qj == 0.0 {
                        continue;
                    }
                    let lb = self.lf[k] - self.lf[j] - self.lf[k - j]
                        + j as f64 * lpj
                        + (k - j) as f64 * lqj;
                    s += lb.exp() * qj * self.p(dim - 1, k - j, x);
                }
                s
            }
        }
    }
}

/// Renewal masses `u(0..=K)`.
pub fn renewal_masses(model: &WalkModel, terms: usize) -> Vec<f64> {
    let mut u = vec![1.0; terms + 1];
    if let Some(s) = model.sibuya() {
        let g = s.gamma();
        for k in 1..=terms {
            u[k] = u[k - 1] * (k as f64 - 1.0 + g) / k as f64;
        }
    }
    u
}

/// Series value at `x` and an error estimate.
fn series_at(kernel: &SimpleWalkKernel, u: &[f64], beta: f64, x: &[i64]) -> (f64, f64) {
    let terms = u.len() - 1;
    let blocks = terms / 2;
    let mut partial = Vec::with_capacity(blocks + 1);
    let mut acc = crate::numerics::CompensatedSum::new();
    partial.push(0.0);
    for i in 0..blocks {
        let k = 2 * i;
        acc.add(u[k] * kernel.p(kernel.d, k, x) + u[k + 1] * kernel.p(kernel.d, k + 1, x));
        partial.push(acc.value());
    }
    let i3 = blocks as f64;
    let (s1, s2, s3) = (partial[blocks / 4], partial[blocks / 2], partial[blocks]);
    let (i1, i2) = ((blocks / 4) as f64, (blocks / 2) as f64);
    // G - S(I) = a I^{1-beta} + b I^{-beta}
    let e = |i: f64| (i.powf(1.0 - beta), i.powf(-beta));
    let (a1, b1) = e(i1);
    let (a2, b2) = e(i2);
    let (a3, b3) = e(i3);
    // Eliminate G: S3 - S2 = a (a2 - a3) + b (b2 - b3), S2 - S1 = a (a1 - a2) + b (b1 - b2)
    let det = (a2 - a3) * (b1 - b2) - (a1 - a2) * (b2 - b3);
    let a = ((s3 - s2) * (b1 - b2) - (s2 - s1) * (b2 - b3)) / det;
    let b = ((a2 - a3) * (s2 - s1) - (a1 - a2) * (s3 - s2)) / det;
    let g3 = s3 + a * a3 + b * b3;
    // Two-point extrapolation for the error estimate.
    let a_only = (s3 - s2) / (a2 - a3);
    let g2 = s3 + a_only * a3;
    (g3, (g3 - g2).abs())
}

/// Default number of series terms for dimension `d`.
pub fn default_terms(d: usize) -> usize {
    match d {
        1..=3 => 8192,
        4 => 1024,
        _ => 256,
    }
}

pub fn renewal_values(
    model: &WalkModel,
    window: &SymmetricWindow,
    terms: usize,
) -> Result<(Vec<f64>, f64)> {
    model.check_transient()?;
    if terms < 64 {
        return Err(Error::Config("renewal series needs at least 64 terms".into()));
    }
    let kernel = SimpleWalkKernel {
        d: model.d(),
        lf: log_factorials(terms + 1),
    };
    let u = renewal_masses(model, terms + 1);
    let gamma = model.sibuya().map_or(1.0, |s| s.gamma());
    let beta = 1.0 - gamma + model.d() as f64 / 2.0;
    let scale = match model.derived() {
        Some(Derived::LoopFree) => 1.0 - model.base_loop_prob(),
        _ => 1.0,
    };
    let keys: Vec<Vec<i64>> = window
        .keys()
        .map(|k| k.iter().map(|&v| v as i64).collect())
        .collect();
    let out: Vec<(f64, f64)> = keys
        .par_iter()
        .map(|x| series_at(&kernel, &u[..=terms], beta, x))
        .collect();
    let err = out.iter().map(|v| v.1).fold(0.0, f64::max) * scale;
    Ok((out.into_iter().map(|v| v.0 * scale).collect(), err))
}

pub fn build_renewal(model: &WalkModel, radius: usize, terms: usize) -> Result<GreenTable> {
    let window = SymmetricWindow::new(model.d(), radius)?;
    let (values, error) = renewal_values(model, &window, terms)?;
    let meta = TableMeta {
        method: GreenMethod::RenewalSeries {
            terms: terms as u64,
        },
        error,
        loop_prob: model.loop_prob(),
    };
    GreenTable::from_reduced(model, window, values, None, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::sibuya_pmf;

    #[test]
    fn renewal_masses_solve_the_renewal_equation() {
        let m = WalkModel::subordinate(3, 0.8).unwrap();
        let u = renewal_masses(&m, 50);
        let g = 0.4;
        for k in 1..=50usize {
            let conv: f64 = (1..=k)
                .map(|j| sibuya_pmf(g, j as u64).unwrap() * u[k - j])
                .sum();
            assert!((conv - u[k]).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn kernel_matches_enumeration() {
        let k = SimpleWalkKernel {
            d: 3,
            lf: log_factorials(20),
        };
        // P(Z_2 = 0) = 1/6 in d = 3; P(Z_2 = e1 + e2) = 2/36.
        assert!((k.p(3, 2, &[0, 0, 0]) - 1.0 / 6.0).abs() < 1e-15);
        assert!((k.p(3, 2, &[1, 1, 0]) - 2.0 / 36.0).abs() < 1e-15);
        // Probabilities over all sites sum to 1.
        let n = 6usize;
        let mut total = 0.0;
        for a in -6i64..=6 {
            for b in -6i64..=6 {
                for c in -6i64..=6 {
                    total += k.p(3, n, &[a, b, c]);
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-13);
    }
}
