//! Torus integrals of functions of the characteristic function, by nested
//! cube quadrature: return probabilities `p_n(x)`, partial sums of
//! `n p_n(0)`, truncated Green functions `G_n(x)` and single Green values.

use crate::error::Result;
use crate::lattice::Site;
use crate::numerics::NestedCubeRule;
use crate::walk::WalkModel;

fn average<F: FnMut(&[f64]) -> f64>(model: &WalkModel, f: F, singular: Option<(f64, f64)>) -> f64 {
    let rule = NestedCubeRule::new(model.d());
    if model.is_bipartite() {
        rule.torus_average_bipolar(f, singular)
    } else {
        rule.torus_average(f, singular)
    }
}

#[inline]
fn cos_factor(theta: &[f64], x: &Site) -> f64 {
    theta
        .iter()
        .enumerate()
        .map(|(j, t)| (t * x.coord(j) as f64).cos())
        .product()
}

/// `phi^n` from `eps = 1 - phi`, accurate when `eps` is tiny.
#[inline]
fn phi_pow(eps: f64, n: u64) -> f64 {
    let phi = 1.0 - eps;
    if phi > 0.0 {
        (n as f64 * (-eps).ln_1p()).exp()
    } else if n <= i32::MAX as u64 {
        phi.powi(n as i32)
    } else {
        phi.abs().powf(n as f64) * if n % 2 == 0 { 1.0 } else { -1.0 }
    }
}

/// `P(S_n = x)`.
pub fn pn_at(model: &WalkModel, n: u64, x: &Site) -> f64 {
    if n == 0 {
        return if x.is_origin() { 1.0 } else { 0.0 };
    }
    average(
        model,
        |t| phi_pow(model.one_minus_charfn(t), n) * cos_factor(t, x),
        None,
    )
}

/// `p_n(0) = P(S_n = 0)`.
pub fn pn_at_origin(model: &WalkModel, n: u64) -> f64 {
    pn_at(model, n, &Site::ORIGIN)
}

/// `sum_{n=1}^{N} n p_n(0)`, the partial sums whose convergence is strong
/// transience.
pub fn return_moment_partial_sum(model: &WalkModel, big_n: u64) -> f64 {
    let nf = big_n as f64;
    average(
        model,
        |t| {
            let eps = model.one_minus_charfn(t);
            let phi = 1.0 - eps;
            if nf * eps < 1e-6 {
                // sum n (1 - eps)^n to first order in eps
                return nf * (nf + 1.0) / 2.0 - eps * nf * (nf + 1.0) * (2.0 * nf + 1.0) / 6.0;
            }
            // phi (1 - phi^N (1 + N eps)) / eps^2
            let num = if phi > 0.0 {
                -(nf * (-eps).ln_1p() + (nf * eps).ln_1p()).exp_m1()
            } else {
                1.0 - phi_pow(eps, big_n) * (1.0 + nf * eps)
            };
            phi * num / (eps * eps)
        },
        None,
    )
}

/// `G_n(x) = sum_{k=0}^{n} p_k(x)`.
pub fn truncated_green_at(model: &WalkModel, n: u64, x: &Site) -> f64 {
    let m = (n + 1) as f64;
    average(
        model,
        |t| {
            let eps = model.one_minus_charfn(t);
            let geo = if m * eps < 1e-6 {
                m - eps * m * (m - 1.0) / 2.0
            } else if eps < 1.0 {
                -(m * (-eps).ln_1p()).exp_m1() / eps
            } else {
                (1.0 - phi_pow(eps, n + 1)) / eps
            };
            geo * cos_factor(t, x)
        },
        None,
    )
}

/// `G(x)` by direct quadrature of `cos(theta . x) / (1 - phi)`, with the
/// innermost cube handled analytically. Intended for small `|x|`.
pub fn green_quadrature_at(model: &WalkModel, x: &Site) -> Result<f64> {
    model.check_transient()?;
    let c = model.singular_coefficient();
    Ok(average(
        model,
        |t| cos_factor(t, x) / model.one_minus_charfn(t),
        Some((c, model.alpha())),
    ))
}

/// `G_n` on a small window; values indexed like a Green table window.
#[derive(Clone, Debug)]
pub struct TruncatedGreenTable {
    pub horizon: u64,
    pub window: super::table::SymmetricWindow,
    pub values: Vec<f64>,
}

impl TruncatedGreenTable {
    pub fn build(model: &WalkModel, horizon: u64, radius: usize) -> Result<Self> {
        use rayon::prelude::*;
        let window = super::table::SymmetricWindow::new(model.d(), radius)?;
        let keys: Vec<Site> = window
            .keys()
            .map(|k| {
                let c: Vec<i64> = k.iter().map(|&v| v as i64).collect();
                Site::from_coords(&c)
            })
            .collect::<Result<_>>()?;
        let values = keys
            .par_iter()
            .map(|x| truncated_green_at(model, horizon, x))
            .collect();
        Ok(TruncatedGreenTable {
            horizon,
            window,
            values,
        })
    }

    pub fn at(&self, x: &Site) -> Option<f64> {
        self.window.index_of(x).map(|i| self.values[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_walk_small_times() {
        let m = WalkModel::simple(1).unwrap();
        assert_eq!(pn_at_origin(&m, 0), 1.0);
        assert!((pn_at_origin(&m, 2) - 0.5).abs() < 1e-14);
        assert!(pn_at_origin(&m, 3).abs() < 1e-14);
        // d = 3, n = 2: 1/6
        let m3 = WalkModel::simple(3).unwrap();
        assert!((pn_at_origin(&m3, 2) - 1.0 / 6.0).abs() < 1e-14);
        // P(S_1 = e_1) = 1/6
        let e1 = Site::from_coords(&[1, 0, 0]).unwrap();
        assert!((pn_at(&m3, 1, &e1) - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn one_step_return_is_the_loop_probability() {
        let m = WalkModel::subordinate(3, 0.8).unwrap();
        assert!((pn_at_origin(&m, 1) - m.base_loop_prob()).abs() < 1e-14);
        let f = m.loop_free().unwrap();
        assert!(pn_at_origin(&f, 1).abs() < 1e-13);
    }

    #[test]
    fn partial_sums_match_direct_sums() {
        let m = WalkModel::subordinate(3, 1.1).unwrap();
        let direct: f64 = (1..=40u64).map(|n| n as f64 * pn_at_origin(&m, n)).sum();
        let closed = return_moment_partial_sum(&m, 40);
        assert!((direct - closed).abs() < 1e-12 * direct.max(1.0), "{direct} vs {closed}");
        let s = WalkModel::simple(3).unwrap();
        let direct: f64 = (1..=30u64).map(|n| n as f64 * pn_at_origin(&s, n)).sum();
        assert!((direct - return_moment_partial_sum(&s, 30)).abs() < 1e-12);
    }

    #[test]
    fn truncated_green_is_monotone_and_below_green() {
        let m = WalkModel::subordinate(3, 0.8).unwrap();
        let x = Site::from_coords(&[1, 1, 0]).unwrap();
        let g = green_quadrature_at(&m, &x).unwrap();
        let mut prev = 0.0;
        for n in [0u64, 1, 2, 5, 20, 100, 1000] {
            let gn = truncated_green_at(&m, n, &x);
            assert!(gn >= prev - 1e-14 && gn <= g + 1e-12, "n={n}: {gn} vs {g}");
            prev = gn;
        }
        let g0 = truncated_green_at(&m, 0, &Site::ORIGIN);
        assert!((g0 - 1.0).abs() < 1e-14);
        let direct = 1.0 + pn_at_origin(&m, 1) + pn_at_origin(&m, 2);
        assert!((truncated_green_at(&m, 2, &Site::ORIGIN) - direct).abs() < 1e-13);
    }
}
