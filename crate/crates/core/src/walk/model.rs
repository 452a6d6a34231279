use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::sibuya::{Sibuya, SibuyaDraw};
use crate::error::{Error, Result};
use crate::lattice::{check_dim, Site, MAX_DIM};
use crate::numerics::NestedCubeRule;
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    Simple,
    Subordinate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derived {
    /// Conditioned on a nonzero step.
    LoopFree,
    /// Loop-free walk with geometric runs of one-step loops added back.
    LoopInserted,
}

/// The model block of an experiment config.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: BaseKind,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived: Option<Derived>,
}

impl ModelSpec {
    pub fn simple(d: usize) -> Self {
        ModelSpec {
            kind: BaseKind::Simple,
            d,
            alpha: None,
            derived: None,
        }
    }

    pub fn subordinate(d: usize, alpha: f64) -> Self {
        ModelSpec {
            kind: BaseKind::Subordinate,
            d,
            alpha: Some(alpha),
            derived: None,
        }
    }

    pub fn with_derived(mut self, derived: Option<Derived>) -> Self {
        self.derived = derived;
        self
    }

    /// Compact code used by the Green table file format.
    pub fn kind_code(&self) -> u8 {
        let base = match self.kind {
            BaseKind::Simple => 0,
            BaseKind::Subordinate => 1,
        };
        let derived = match self.derived {
            None => 0,
            Some(Derived::LoopFree) => 1,
            Some(Derived::LoopInserted) => 2,
        };
        base + 2 * derived
    }

    pub fn from_kind_code(code: u8, d: usize, alpha: f64) -> Result<Self> {
        let kind = match code % 2 {
            0 => BaseKind::Simple,
            _ => BaseKind::Subordinate,
        };
        let derived = match code / 2 {
            0 => None,
            1 => Some(Derived::LoopFree),
            2 => Some(Derived::LoopInserted),
            _ => return Err(Error::Format(format!("unknown model kind code {code}"))),
        };
        Ok(ModelSpec {
            kind,
            d,
            alpha: (kind == BaseKind::Subordinate).then_some(alpha),
            derived,
        })
    }
}

/// Step law of a walk on `Z^d`.
#[derive(Clone)]
pub struct WalkModel {
    spec: ModelSpec,
    alpha: f64,
    sibuya: Option<Arc<Sibuya>>,
    base_loop_prob: f64,
}

impl fmt::Debug for WalkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WalkModel({self})")
    }
}

impl fmt::Display for WalkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.spec.kind {
            BaseKind::Simple => write!(f, "simple(d={})", self.spec.d)?,
            BaseKind::Subordinate => {
                write!(f, "subordinate(alpha={},d={})", self.alpha, self.spec.d)?
            }
        }
        match self.spec.derived {
            None => Ok(()),
            Some(Derived::LoopFree) => write!(f, "+loop_free"),
            Some(Derived::LoopInserted) => write!(f, "+loop_inserted"),
        }
    }
}

/// `1 - phi_Z(theta)` for the simple walk, computed without cancellation.
#[inline]
pub fn simple_one_minus_charfn(theta: &[f64]) -> f64 {
    let d = theta.len() as f64;
    2.0 / d
        * theta
            .iter()
            .map(|t| {
                let s = (0.5 * t).sin();
                s * s
            })
            .sum::<f64>()
}

impl WalkModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        check_dim(spec.d)?;
        let alpha = match spec.kind {
            BaseKind::Simple => {
                if spec.alpha.is_some_and(|a| a != 2.0) {
                    return Err(Error::Config("the simple walk has alpha = 2".into()));
                }
                2.0
            }
            BaseKind::Subordinate => {
                let a = spec.alpha.ok_or_else(|| {
                    Error::Config("subordinate model needs alpha".into())
                })?;
                if !(a > 0.0 && a <= 2.0) {
                    return Err(Error::Domain(format!("alpha must lie in (0, 2], got {a}")));
                }
                a
            }
        };
        let sibuya = if alpha < 2.0 {
            Some(Arc::new(Sibuya::new(alpha / 2.0)?))
        } else {
            None
        };
        let mut model = WalkModel {
            spec,
            alpha,
            sibuya,
            base_loop_prob: 0.0,
        };
        if model.sibuya.is_some() {
            model.base_loop_prob = model.compute_base_loop_prob();
        }
        Ok(model)
    }

    pub fn simple(d: usize) -> Result<Self> {
        WalkModel::new(ModelSpec::simple(d))
    }

    pub fn subordinate(d: usize, alpha: f64) -> Result<Self> {
        WalkModel::new(ModelSpec::subordinate(d, alpha))
    }

    fn with_derived(&self, derived: Option<Derived>) -> Self {
        let mut m = self.clone();
        m.spec.derived = derived;
        m
    }

    /// The base model conditioned on nonzero steps.
    pub fn loop_free(&self) -> Result<Self> {
        if self.base_loop_prob >= 1.0 {
            return Err(Error::Domain("loop probability must be below 1".into()));
        }
        Ok(self.with_derived(Some(Derived::LoopFree)))
    }

    /// The loop-free model with one-step loops re-inserted; same law as the base.
    pub fn loop_inserted(&self) -> Self {
        self.with_derived(Some(Derived::LoopInserted))
    }

    pub fn base(&self) -> Self {
        self.with_derived(None)
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> BaseKind {
        self.spec.kind
    }

    pub fn derived(&self) -> Option<Derived> {
        self.spec.derived
    }

    pub fn sibuya(&self) -> Option<&Sibuya> {
        self.sibuya.as_deref()
    }

    /// A subordinate model with `alpha = 2` is the simple walk in disguise.
    pub fn is_degenerate(&self) -> bool {
        self.spec.kind == BaseKind::Subordinate && self.alpha >= 2.0
    }

    /// `p = P(X_1 = 0)` of the base model.
    pub fn base_loop_prob(&self) -> f64 {
        self.base_loop_prob
    }

    /// `P(X_1 = 0)` of this model.
    pub fn loop_prob(&self) -> f64 {
        match self.spec.derived {
            Some(Derived::LoopFree) => 0.0,
            _ => self.base_loop_prob,
        }
    }

    pub fn is_transient(&self) -> bool {
        self.spec.d as f64 > self.alpha
    }

    pub fn check_transient(&self) -> Result<()> {
        if self.is_transient() {
            Ok(())
        } else {
            Err(Error::Recurrent {
                d: self.spec.d,
                alpha: self.alpha,
            })
        }
    }

    /// `d > 2 alpha`: `sum n p_n(0) < infinity`.
    pub fn is_strongly_transient(&self) -> bool {
        self.spec.d as f64 > 2.0 * self.alpha
    }

    /// True when the step law lives on odd-parity sites, so that
    /// `phi(theta + pi) = -phi(theta)` and return probabilities vanish at odd
    /// times.
    pub fn is_bipartite(&self) -> bool {
        self.sibuya.is_none()
    }

    /// `1 - phi(theta)` for the step law, accurate near `theta = 0`.
    #[inline]
    pub fn one_minus_charfn(&self, theta: &[f64]) -> f64 {
        let z = simple_one_minus_charfn(theta);
        let base = match &self.sibuya {
            None => z,
            Some(s) => z.powf(s.gamma()),
        };
        match self.spec.derived {
            Some(Derived::LoopFree) => base / (1.0 - self.base_loop_prob),
            _ => base,
        }
    }

    #[inline]
    pub fn charfn(&self, theta: &[f64]) -> f64 {
        1.0 - self.one_minus_charfn(theta)
    }

    /// `c` in `1 - phi(theta) ~ |theta|^alpha / c`, i.e. the singular part
    /// `c |theta|^-alpha` of `1 / (1 - phi)`.
    pub fn singular_coefficient(&self) -> f64 {
        let d = self.spec.d as f64;
        let c = (2.0 * d).powf(self.alpha / 2.0);
        match self.spec.derived {
            Some(Derived::LoopFree) => c * (1.0 - self.base_loop_prob),
            _ => c,
        }
    }

    fn compute_base_loop_prob(&self) -> f64 {
        let base = self.base();
        NestedCubeRule::new(self.spec.d).torus_average(|t| base.charfn(t), None)
    }

    /// One increment `X_i` of the walk.
    pub fn sample_increment(&self, rng: &mut RngStream) -> Result<Site> {
        match self.spec.derived {
            Some(Derived::LoopFree) => loop {
                let x = self.sample_base_increment(rng)?;
                if !x.is_origin() {
                    return Ok(x);
                }
            },
            _ => self.sample_base_increment(rng),
        }
    }

    fn sample_base_increment(&self, rng: &mut RngStream) -> Result<Site> {
        let d = self.spec.d;
        match &self.sibuya {
            None => {
                let v = rng.below(2 * d as u64);
                Ok(Site::unit((v / 2) as usize, v % 2 == 1))
            }
            Some(s) => simple_walk_displacement(d, s.sample(rng), rng),
        }
    }
}

/// Largest number of simple-walk steps simulated one by one.
const DIRECT_STEPS: u64 = 64;

/// `Binomial(n, 1/2)`; exact popcount for small `n`, BTPE otherwise.
#[inline]
fn binomial_half(n: u64, rng: &mut RngStream) -> u64 {
    if n <= 64 {
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        (rng.next_u64() & mask).count_ones() as u64
    } else {
        Binomial::new(n, 0.5).expect("valid binomial").sample(rng)
    }
}

/// `Z_k - Z_0` for a `d`-dimensional simple walk `Z`, without simulating the
/// `k` steps when `k` is large: the steps are split among the axes by a
/// multinomial and each axis displacement is `2 Bin(k_j, 1/2) - k_j`.
pub fn simple_walk_displacement(d: usize, k: SibuyaDraw, rng: &mut RngStream) -> Result<Site> {
    let mut site = Site::ORIGIN;
    match k {
        SibuyaDraw::Exact(k) if k <= DIRECT_STEPS => {
            let c = match d {
                1 => direct_steps::<2>(k, rng),
                2 => direct_steps::<4>(k, rng),
                3 => direct_steps::<6>(k, rng),
                4 => direct_steps::<8>(k, rng),
                5 => direct_steps::<10>(k, rng),
                _ => direct_steps::<12>(k, rng),
            };
            for (j, v) in c.iter().enumerate().take(d) {
                site.set(j, *v);
            }
        }
        SibuyaDraw::Exact(k) => {
            let mut remaining = k;
            for j in 0..d {
                let kj = if j + 1 == d {
                    remaining
                } else {
                    let p = 1.0 / (d - j) as f64;
                    Binomial::new(remaining, p)
                        .expect("valid binomial")
                        .sample(rng)
                };
                remaining -= kj;
                let heads = binomial_half(kj, rng);
                site.set(j, 2 * heads as i64 - kj as i64);
            }
        }
        SibuyaDraw::Huge(k) => {
            // Each coordinate is a sum of about k/d signs; the Gaussian limit
            // is exact to relative order k^-1/2 < 2^-30.
            let sd = (k / d as f64).sqrt();
            for j in 0..d {
                let v = (standard_normal(rng) * sd).round();
                if !(v.abs() < 4.0e18) {
                    return Err(Error::Overflow);
                }
                site.set(j, v as i64);
            }
        }
    }
    Ok(site)
}

/// `k` simple-walk steps with `B = 2d` equally likely directions. One
/// uniform draw below `B^m` supplies the next `m` directions as base-`B`
/// digits.
fn direct_steps<const B: u64>(k: u64, rng: &mut RngStream) -> [i64; MAX_DIM] {
    let per = (64.0 / (B as f64).log2()).floor() as u64 - 1;
    let mut c = [0i64; MAX_DIM];
    let mut left = k;
    while left > 0 {
        let m = left.min(per);
        let mut v = rng.below(B.pow(m as u32));
        for _ in 0..m {
            let r = v % B;
            v /= B;
            c[(r / 2) as usize] += if r % 2 == 1 { -1 } else { 1 };
        }
        left -= m;
    }
    c
}

fn standard_normal(rng: &mut RngStream) -> f64 {
    let u1 = rng.uniform_open0();
    let u2 = rng.uniform();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, StreamId};

    fn rng(i: u64) -> RngStream {
        RngStream::new(99, StreamId::new(Purpose::Test, i))
    }

    #[test]
    fn charfn_values() {
        let s2 = WalkModel::simple(2).unwrap();
        assert_eq!(s2.charfn(&[0.0, 0.0]), 1.0);
        assert!((s2.charfn(&[PI, PI]) + 1.0).abs() < 1e-15);
        let sub = WalkModel::subordinate(1, 1.0).unwrap();
        assert!((sub.charfn(&[PI]) - (1.0 - 2f64.sqrt())).abs() < 1e-14);
        assert_eq!(sub.charfn(&[0.0]), 1.0);
    }

    #[test]
    fn model_validation() {
        assert!(WalkModel::subordinate(3, 0.0).is_err());
        assert!(WalkModel::subordinate(3, 2.5).is_err());
        assert!(WalkModel::simple(0).is_err());
        let deg = WalkModel::subordinate(3, 2.0).unwrap();
        assert!(deg.is_degenerate());
        assert_eq!(deg.base_loop_prob(), 0.0);
        let spec: ModelSpec =
            serde_json::from_str(r#"{"kind":"subordinate","d":3,"alpha":0.8,"derived":"loop_free"}"#)
                .unwrap();
        assert_eq!(spec.derived, Some(Derived::LoopFree));
        let back = ModelSpec::from_kind_code(spec.kind_code(), 3, 0.8).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn single_step_displacement_is_a_unit_vector() {
        let mut r = rng(0);
        let mut counts = [0usize; 6];
        for _ in 0..60_000 {
            let s = simple_walk_displacement(3, SibuyaDraw::Exact(1), &mut r).unwrap();
            assert_eq!(s.l1_norm(), 1);
            let axis = (0..3).find(|&j| s.coord(j) != 0).unwrap();
            counts[2 * axis + usize::from(s.coord(axis) < 0)] += 1;
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 5.0 * 91.3, "{counts:?}");
        }
    }

    #[test]
    fn displacement_parity_matches_step_count() {
        let mut r = rng(1);
        for k in [1u64, 2, 7, 64, 65, 1000, 123_457] {
            for _ in 0..50 {
                let s = simple_walk_displacement(3, SibuyaDraw::Exact(k), &mut r).unwrap();
                let sum: i64 = s.coords(3).iter().sum();
                assert_eq!(sum.rem_euclid(2) as u64, k % 2);
                assert!(s.l1_norm() <= k as u128);
            }
        }
    }

    #[test]
    fn loop_free_model_never_stays() {
        let m = WalkModel::subordinate(3, 0.8).unwrap().loop_free().unwrap();
        let mut r = rng(2);
        for _ in 0..100_000 {
            assert!(!m.sample_increment(&mut r).unwrap().is_origin());
        }
        let s = WalkModel::simple(3).unwrap();
        assert_eq!(s.loop_free().unwrap().loop_prob(), 0.0);
    }

    #[test]
    fn loop_prob_agrees_with_monte_carlo() {
        let m = WalkModel::subordinate(3, 0.8).unwrap();
        let p = m.base_loop_prob();
        assert!(p > 0.0 && p < 0.2, "{p}");
        let mut r = rng(3);
        let n = 1_000_000;
        let zeros = (0..n)
            .filter(|_| m.sample_increment(&mut r).unwrap().is_origin())
            .count() as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((zeros / n as f64 - p).abs() < 4.0 * se, "mc {} vs {p}", zeros / n as f64);
    }
}
