//! Quadrature, summation and special constants shared by the Green function
//! backends.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        // Newton at x = 0 with (x^2 - 1) in the denominator is fine, but pin the
        // middle node exactly.
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut s = CompensatedSum::new();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Fixed-point accumulator with resolution `2^-96`. Sums of nonnegative terms
/// are exact and therefore independent of summation order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct FixedSum(i128);

const FIXED_SCALE: f64 = 79_228_162_514_264_337_593_543_950_336.0; // 2^96

impl FixedSum {
    pub const ZERO: FixedSum = FixedSum(0);

    #[inline]
    pub fn quantize(x: f64) -> FixedSum {
        debug_assert!(x.is_finite() && x.abs() < 1.0e9);
        FixedSum((x * FIXED_SCALE).round() as i128)
    }

    #[inline]
    pub fn add_f64(&mut self, x: f64) {
        self.0 += FixedSum::quantize(x).0;
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / FIXED_SCALE
    }
}

impl std::ops::Add for FixedSum {
    type Output = FixedSum;
    fn add(self, rhs: FixedSum) -> FixedSum {
        FixedSum(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for FixedSum {
    fn add_assign(&mut self, rhs: FixedSum) {
        self.0 += rhs.0;
    }
}

/// Tensor-product Gauss rule on an axis-aligned box, calling `f` at every node.
pub struct TensorGauss {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TensorGauss {
    pub fn new(q: usize) -> Self {
        let (nodes, weights) = gauss_legendre(q);
        TensorGauss { nodes, weights }
    }

    /// Integral of `f` over `prod [lo_j, hi_j]`.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, lo: &[f64], hi: &[f64], mut f: F) -> f64 {
        let d = lo.len();
        let q = self.nodes.len();
        let half: Vec<f64> = (0..d).map(|j| 0.5 * (hi[j] - lo[j])).collect();
        let mid: Vec<f64> = (0..d).map(|j| 0.5 * (hi[j] + lo[j])).collect();
        let mut idx = vec![0usize; d];
        let mut point = vec![0.0; d];
        let mut total = CompensatedSum::new();
        loop {
            let mut w = 1.0;
            for j in 0..d {
                point[j] = mid[j] + half[j] * self.nodes[idx[j]];
                w *= self.weights[idx[j]];
            }
            total.add(w * f(&point));
            let mut j = 0;
            loop {
                if j == d {
                    let vol: f64 = half.iter().product();
                    return total.value() * vol;
                }
                idx[j] += 1;
                if idx[j] < q {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }
}

/// `int_{[-1,1]^{d-1}} (1 + |y|^2)^{-p/2} dy`; equals 1 for `d = 1`.
pub fn face_integral(d: usize, p: f64) -> f64 {
    if d == 1 {
        return 1.0;
    }
    // The integrand is smooth on the face; split each axis in two for safety.
    let rule = TensorGauss::new(24);
    let mut total = 0.0;
    let cells = 1usize << (d - 1);
    for mask in 0..cells {
        let lo: Vec<f64> = (0..d - 1)
            .map(|j| if mask >> j & 1 == 1 { 0.0 } else { -1.0 })
            .collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + 1.0).collect();
        total += rule.integrate(&lo, &hi, |y| {
            let r2 = 1.0 + y.iter().map(|v| v * v).sum::<f64>();
            r2.powf(-0.5 * p)
        });
    }
    total
}

/// `int_{[0,1]^d} |u|^{-alpha} du` for `alpha < d`, by cone decomposition
/// over the faces `u_j = 1`.
pub fn orthant_cube_power_integral(d: usize, alpha: f64) -> f64 {
    assert!(alpha < d as f64);
    let face = face_integral(d, alpha) / (1u64 << (d - 1)) as f64;
    d as f64 / (d as f64 - alpha) * face
}

/// `int_{|y|_inf > half_side} |y|^{-p} dy` over `R^d`, for `p > d`.
pub fn cube_exterior_power_integral(d: usize, p: f64, half_side: f64) -> f64 {
    assert!(p > d as f64);
    let face = face_integral(d, p);
    half_side.powf(d as f64 - p) * 2.0 * d as f64 / (p - d as f64) * face
}

fn jacobi_theta3(t: f64) -> f64 {
    let mut s = 1.0;
    let mut n = 1.0f64;
    loop {
        let term = 2.0 * (-PI * n * n * t).exp();
        s += term;
        if term < 1e-18 {
            return s;
        }
        n += 1.0;
    }
}

/// Epstein zeta function of the cubic lattice, `sum'_{m in Z^d} |m|^{-2s}`,
/// analytically continued, for `0 < s < d/2`.
///
/// Uses the theta-function representation
/// `Gamma(s) pi^-s Z(s) = -1/s - 1/(d/2-s) + int_1^inf (t^{s-1} + t^{d/2-s-1}) (theta(t)^d - 1) dt`.
pub fn epstein_zeta(d: usize, s: f64) -> f64 {
    let half_d = d as f64 / 2.0;
    assert!(s > 0.0 && s < half_d, "epstein_zeta needs 0 < s < d/2");
    let (nodes, weights) = gauss_legendre(20);
    let mut integral = CompensatedSum::new();
    for k in 0..48 {
        let (a, b) = (1.0 + k as f64, 2.0 + k as f64);
        for (x, w) in nodes.iter().zip(&weights) {
            let t = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let theta = jacobi_theta3(t).powi(d as i32) - 1.0;
            let kern = t.powf(s - 1.0) + t.powf(half_d - s - 1.0);
            integral.add(0.5 * (b - a) * w * kern * theta);
        }
    }
    let bracket = -1.0 / s - 1.0 / (half_d - s) + integral.value();
    bracket * PI.powf(s) / statrs::function::gamma::gamma(s)
}

/// Zeta-regularised lattice sum `sum'_{j in Z^d, j != 0} |u + j|^-p` for
/// `0 < p < d`, a smooth function of `u` near the origin. At `u = 0` it is
/// the Epstein zeta value at `p / 2`.
///
/// Evaluated by Ewald splitting of the Mellin integral at `t = 1`: a rapidly
/// convergent direct sum of upper incomplete gammas, a dual sum over the
/// reciprocal lattice, the analytically continued `k = 0` pole term and the
/// smooth remainder of the excluded `j = 0` term.
pub fn periodic_power_sum(d: usize, p: f64, u: &[f64]) -> f64 {
    use statrs::function::gamma::{gamma, gamma_ui};
    let half_d = d as f64 / 2.0;
    let s = p / 2.0;
    assert!(s > 0.0 && s < half_d, "periodic_power_sum needs 0 < p < d");
    const CUT2: f64 = 12.0;
    let mut direct = CompensatedSum::new();
    let mut dual = CompensatedSum::new();
    let mut j = vec![-4i32; d];
    loop {
        let nonzero = j.iter().any(|&v| v != 0);
        if nonzero {
            let r2: f64 = j
                .iter()
                .zip(u)
                .map(|(&a, &b)| {
                    let v = a as f64 + b;
                    v * v
                })
                .sum();
            if r2 < CUT2 {
                direct.add(gamma_ui(s, PI * r2) * r2.powf(-s));
            }
            let k2: f64 = j.iter().map(|&a| (a * a) as f64).sum();
            if k2 < CUT2 {
                let phase: f64 = j.iter().zip(u).map(|(&a, &b)| a as f64 * b).sum();
                dual.add(
                    gamma_ui(half_d - s, PI * k2)
                        * (PI * k2).powf(s - half_d)
                        * (2.0 * PI * phase).cos(),
                );
            }
        }
        let mut i = 0;
        loop {
            if i == d {
                let x = PI * u.iter().map(|v| v * v).sum::<f64>();
                // gamma_lower(s, x) |u|^-2s = pi^s sum_n (-x)^n / (n! (s + n))
                let mut series = CompensatedSum::new();
                let mut term = 1.0;
                for n in 0..200 {
                    series.add(term / (s + n as f64));
                    term *= -x / (n + 1) as f64;
                    if term.abs() < 1e-18 {
                        break;
                    }
                }
                let ps = PI.powf(s);
                let total = direct.value() - ps * series.value() - ps / (half_d - s) + ps * dual.value();
                return total / gamma(s);
            }
            j[i] += 1;
            if j[i] <= 4 {
                break;
            }
            j[i] = -4;
            i += 1;
        }
    }
}

/// Orthant-symmetric torus average `(2 pi)^-d int_{[-pi,pi]^d} f` for an
/// integrand even in every coordinate and possibly sharply peaked (or
/// integrably singular) at the origin.
///
/// The orthant `[0, pi]^d` is split into nested shells `[0,s]^d \ [0,s/2]^d`
/// with `s = pi 2^-j`, each made of `2^d - 1` cubes integrated by a tensor
/// Gauss rule. The innermost cube is integrated directly, or, when
/// `singular = Some((c, a))` declares `f ~ c |theta|^-a`, analytically.
pub struct NestedCubeRule {
    d: usize,
    rule: TensorGauss,
    pub tol: f64,
    pub min_levels: usize,
    pub max_levels: usize,
}

impl NestedCubeRule {
    pub fn new(d: usize) -> Self {
        let q = match d {
            1 => 16,
            2 => 14,
            3 => 10,
            4 => 8,
            _ => 6,
        };
        NestedCubeRule {
            d,
            rule: TensorGauss::new(q),
            tol: 1e-15,
            min_levels: 4,
            max_levels: 160,
        }
    }

    pub fn with_order(d: usize, q: usize) -> Self {
        NestedCubeRule {
            rule: TensorGauss::new(q),
            ..NestedCubeRule::new(d)
        }
    }

    /// `(2 pi)^-d int_{[-pi,pi]^d} f`.
    pub fn torus_average<F: FnMut(&[f64]) -> f64>(&self, f: F, singular: Option<(f64, f64)>) -> f64 {
        self.orthant_integral(f, PI, singular) / PI.powi(self.d as i32)
    }

    /// Like [`NestedCubeRule::torus_average`] for integrands that are also
    /// peaked at the corner `(pi, ..., pi)`, as `phi^n` is for a walk whose
    /// steps all have odd coordinate sum. The corner is refined with the same
    /// nested shells (it must not carry a declared singularity).
    pub fn torus_average_bipolar<F: FnMut(&[f64]) -> f64>(
        &self,
        mut f: F,
        singular: Option<(f64, f64)>,
    ) -> f64 {
        let d = self.d;
        let h = 0.5 * PI;
        let mut total = CompensatedSum::new();
        total.add(self.orthant_integral(&mut f, h, singular));
        let mut mirrored = vec![0.0; d];
        total.add(self.orthant_integral(
            |t: &[f64]| {
                for (m, v) in mirrored.iter_mut().zip(t) {
                    *m = PI - v;
                }
                f(&mirrored)
            },
            h,
            None,
        ));
        let full = (1u32 << d) - 1;
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for mask in 1..full {
            for sub in 0..=full {
                for j in 0..d {
                    let base = if mask >> j & 1 == 1 { h } else { 0.0 };
                    let off = if sub >> j & 1 == 1 { 0.5 * h } else { 0.0 };
                    lo[j] = base + off;
                    hi[j] = lo[j] + 0.5 * h;
                }
                total.add(self.rule.integrate(&lo, &hi, &mut f));
            }
        }
        total.value() / PI.powi(d as i32)
    }

    /// `int_{[0,side]^d} f`, refining towards the origin.
    pub fn orthant_integral<F: FnMut(&[f64]) -> f64>(
        &self,
        mut f: F,
        side: f64,
        singular: Option<(f64, f64)>,
    ) -> f64 {
        let d = self.d;
        let mut total = CompensatedSum::new();
        let mut s = side;
        let mut level = 0usize;
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        loop {
            let half = 0.5 * s;
            let mut contrib = 0.0;
            for mask in 1u32..(1u32 << d) {
                for j in 0..d {
                    if mask >> j & 1 == 1 {
                        lo[j] = half;
                        hi[j] = s;
                    } else {
                        lo[j] = 0.0;
                        hi[j] = half;
                    }
                }
                contrib += self.rule.integrate(&lo, &hi, &mut f);
            }
            total.add(contrib);
            s = half;
            level += 1;
            let t = total.value().abs();
            let done = level >= self.min_levels
                && t > 0.0
                && contrib.abs() <= self.tol * t
                && singular.is_none_or(|(c, a)| (c * s.powf(d as f64 - a)).abs() <= self.tol * t);
            if done || level >= self.max_levels {
                break;
            }
        }
        let inner = match singular {
            Some((c, a)) => c * s.powf(d as f64 - a) * orthant_cube_power_integral(d, a),
            None => {
                lo.iter_mut().for_each(|v| *v = 0.0);
                hi.iter_mut().for_each(|v| *v = s);
                self.rule.integrate(&lo, &hi, &mut f)
            }
        };
        total.add(inner);
        total.value()
    }
}

/// Ordinary least squares slope and intercept of `y` against `x`, with the
/// standard error of the slope (zero when fewer than three points).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if x.len() > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 10, 24] {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let want = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((got - want).abs() < 1e-13, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn epstein_zeta_in_one_dimension_is_twice_riemann_zeta() {
        // zeta(1/2) and zeta(4/5) to 20 digits.
        let z = epstein_zeta(1, 0.25);
        assert!((z - 2.0 * -1.460_354_508_809_586_8).abs() < 1e-11, "{z}");
        let z = epstein_zeta(1, 0.4);
        assert!((z - 2.0 * -4.437_538_415_895_551_6).abs() < 1e-11, "{z}");
    }

    #[test]
    fn epstein_zeta_cubic_lattice_s1() {
        // Regularised sum'_{Z^3} |m|^-2, a classical lattice constant.
        let z = epstein_zeta(3, 1.0);
        assert!((z + 8.913_632_917_585_15).abs() < 1e-9, "{z}");
    }

    #[test]
    fn periodic_power_sum_matches_hurwitz_zeta() {
        // d = 1: zeta(p, 1 + u) + zeta(p, 1 - u).
        let cases = [
            (0.6, 0.2, -3.853_890_800_878_894),
            (0.3, 0.45, -1.683_335_780_966_0),
            (0.9, 0.0, -18.860_228_038_804_51),
        ];
        for (p, u, want) in cases {
            let got = periodic_power_sum(1, p, &[u]);
            assert!((got - want).abs() < 1e-11, "p={p} u={u}: {got} vs {want}");
        }
        for (d, p) in [(3usize, 2.2), (3, 1.0), (5, 3.4)] {
            let at0 = periodic_power_sum(d, p, &vec![0.0; d]);
            assert!((at0 - epstein_zeta(d, p / 2.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn cube_integrals() {
        // d = 1: int_0^1 u^-a = 1/(1-a)
        assert!((orthant_cube_power_integral(1, 0.4) - 1.0 / 0.6).abs() < 1e-14);
        // alpha = 0 gives the volume.
        assert!((orthant_cube_power_integral(3, 0.0) - 1.0).abs() < 1e-12);
        // d = 2, alpha = 1: int_{[0,1]^2} 1/|u| = 2 asinh(1)
        let want = 2.0 * 1.0f64.asinh();
        assert!((orthant_cube_power_integral(2, 1.0) - want).abs() < 1e-12);
        // exterior of [-1,1] in d = 1: 2 int_1^inf y^-p = 2/(p-1)
        assert!((cube_exterior_power_integral(1, 3.0, 1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nested_rule_matches_closed_forms() {
        // Average of cos(t1) cos(t2) ... over the torus is 0; of 1 is 1.
        let rule = NestedCubeRule::new(3);
        let one = rule.torus_average(|_| 1.0, None);
        assert!((one - 1.0).abs() < 1e-13);
        // (1/d sum cos)^2 averages to 1/(2d).
        let sq = rule.torus_average(
            |t| {
                let m = t.iter().map(|v| v.cos()).sum::<f64>() / 3.0;
                m * m
            },
            None,
        );
        assert!((sq - 1.0 / 6.0).abs() < 1e-13);
        // Singular integrand |t|^-1 in d = 1: (1/pi) int_0^pi t^-a dt.
        let r1 = NestedCubeRule::new(1);
        let a: f64 = 0.6;
        let got = r1.torus_average(|t| t[0].abs().powf(-a), Some((1.0, a)));
        let want = PI.powf(1.0 - a) / (1.0 - a) / PI;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn bipolar_rule_resolves_both_peaks() {
        // Simple walk in d = 1: average of cos(t)^n is C(n, n/2) 2^-n for even n.
        let r = NestedCubeRule::new(1);
        let n = 400;
        let got = r.torus_average_bipolar(|t| t[0].cos().powi(n), None);
        let mut want = 1.0f64;
        for k in 1..=n / 2 {
            want *= (n / 2 + k) as f64 / k as f64 / 4.0;
        }
        assert!((got / want - 1.0).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn fixed_sum_is_order_independent() {
        let xs = [1.0, 1e-20, 3.3, 2.0f64.powi(-90), 0.7];
        let mut a = FixedSum::ZERO;
        let mut b = FixedSum::ZERO;
        for x in xs {
            a.add_f64(x);
        }
        for x in xs.iter().rev() {
            b.add_f64(*x);
        }
        assert_eq!(a, b);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (s, i, se) = linear_fit(&x, &y);
        assert!((s - 2.5).abs() < 1e-14 && (i + 1.0).abs() < 1e-14 && se < 1e-12);
    }
}
