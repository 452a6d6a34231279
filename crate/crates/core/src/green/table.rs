use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::lattice::{Site, MAX_DIM};
use crate::walk::{ModelSpec, WalkModel};

/// The symmetry-reduced view of the cube `|x|_inf <= R`: one key per orbit of
/// the hyperoctahedral group, written as sorted absolute coordinates.
#[derive(Clone, Debug)]
pub struct SymmetricWindow {
    d: usize,
    radius: usize,
    keys: Vec<[u32; MAX_DIM]>,
    /// Key index of every point of the nonnegative orthant `[0, R]^d`.
    orthant: Vec<u32>,
}

impl SymmetricWindow {
    pub fn new(d: usize, radius: usize) -> Result<Self> {
        crate::lattice::check_dim(d)?;
        let side = radius as u128 + 1;
        let cells = side.pow(d as u32);
        crate::limits::check_allocation("symmetric window", cells * 4)?;
        let mut keys = Vec::new();
        let mut cur = [0u32; MAX_DIM];
        fn rec(
            pos: usize,
            d: usize,
            lo: u32,
            radius: u32,
            cur: &mut [u32; MAX_DIM],
            out: &mut Vec<[u32; MAX_DIM]>,
        ) {
            if pos == d {
                out.push(*cur);
                return;
            }
            for v in lo..=radius {
                cur[pos] = v;
                rec(pos + 1, d, v, radius, cur, out);
            }
            cur[pos] = 0;
        }
        rec(0, d, 0, radius as u32, &mut cur, &mut keys);
        let mut w = SymmetricWindow {
            d,
            radius,
            keys,
            orthant: vec![0; cells as usize],
        };
        let mut c = [0u32; MAX_DIM];
        for idx in 0..w.orthant.len() {
            let mut rem = idx;
            for v in c.iter_mut().take(d) {
                *v = (rem % (radius + 1)) as u32;
                rem /= radius + 1;
            }
            w.orthant[idx] = w.key_index(&c[..d]) as u32;
        }
        Ok(w)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, i: usize) -> &[u32] {
        &self.keys[i][..self.d]
    }

    pub fn keys(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.keys.iter().map(move |k| &k[..self.d])
    }

    /// Position of the sorted tuple `c` (any order accepted) in lex order.
    pub fn key_index(&self, c: &[u32]) -> usize {
        let mut s = [0u32; MAX_DIM];
        s[..self.d].copy_from_slice(c);
        s[..self.d].sort_unstable();
        self.keys
            .binary_search_by(|k| k[..self.d].cmp(&s[..self.d]))
            .expect("key inside the window")
    }

    /// Number of lattice points in the orbit of key `i`.
    pub fn multiplicity(&self, i: usize) -> u64 {
        let k = self.key(i);
        let mut perms: u64 = (1..=self.d as u64).product();
        let mut run = 1u64;
        for j in 1..=self.d {
            if j < self.d && k[j] == k[j - 1] {
                run += 1;
            } else {
                perms /= (1..=run).product::<u64>();
                run = 1;
            }
        }
        perms << k.iter().filter(|&&v| v != 0).count()
    }

    /// Key index of the site, if it lies in the window.
    #[inline]
    pub fn index_of(&self, x: &Site) -> Option<usize> {
        let r = self.radius as u64;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for j in 0..self.d {
            let a = x.coord(j).unsigned_abs();
            if a > r {
                return None;
            }
            idx += a as usize * stride;
            stride *= self.radius + 1;
        }
        Some(self.orthant[idx] as usize)
    }

    /// Orthant position of a tuple of absolute coordinates.
    pub fn orthant_index(&self, c: &[u32]) -> usize {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &v in c {
            idx += v as usize * stride;
            stride *= self.radius + 1;
        }
        idx
    }

    pub fn orthant_len(&self) -> usize {
        self.orthant.len()
    }

    pub fn orthant_key(&self, idx: usize) -> usize {
        self.orthant[idx] as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum GreenMethod {
    FourierGrid { n: usize },
    OccupationMc { paths: u64, horizon: u64 },
    RenewalSeries { terms: u64 },
}

impl GreenMethod {
    pub fn code(&self) -> (u8, u64, u64) {
        match *self {
            GreenMethod::FourierGrid { n } => (0, n as u64, 0),
            GreenMethod::OccupationMc { paths, horizon } => (1, paths, horizon),
            GreenMethod::RenewalSeries { terms } => (2, terms, 0),
        }
    }

    pub fn from_code(code: u8, param: u64, aux: u64) -> Result<Self> {
        Ok(match code {
            0 => GreenMethod::FourierGrid { n: param as usize },
            1 => GreenMethod::OccupationMc {
                paths: param,
                horizon: aux,
            },
            2 => GreenMethod::RenewalSeries { terms: param },
            _ => return Err(Error::Format(format!("unknown Green backend code {code}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub method: GreenMethod,
    /// Estimated absolute error of the table entries (truncation bound or
    /// largest Monte Carlo standard error).
    pub error: f64,
    /// One-step-loop probability of the model the table was built for.
    pub loop_prob: f64,
}

/// `G(x) ~ c |x|^exponent` beyond the window, with the Euclidean norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarField {
    pub constant: f64,
    pub exponent: f64,
}

/// Constant of the continuum Riesz kernel whose Fourier transform is
/// `c |theta|^-alpha`; the leading asymptotics of `G`.
pub fn riesz_constant(model: &WalkModel) -> f64 {
    let d = model.d() as f64;
    let a = model.alpha();
    model.singular_coefficient() * gamma((d - a) / 2.0)
        / (2f64.powf(a) * std::f64::consts::PI.powf(d / 2.0) * gamma(a / 2.0))
}

/// A Green function on the window `|x|_inf <= R` plus a far-field law.
#[derive(Clone, Debug)]
pub struct GreenTable {
    spec: ModelSpec,
    alpha: f64,
    window: SymmetricWindow,
    values: Vec<f64>,
    dense: Vec<f64>,
    std_err: Option<Vec<f64>>,
    far: FarField,
    meta: TableMeta,
}

impl GreenTable {
    /// Assemble a table from reduced values and fit the far field on the
    /// shell `R/2 <= |x|_inf <= R`.
    pub fn from_reduced(
        model: &WalkModel,
        window: SymmetricWindow,
        values: Vec<f64>,
        std_err: Option<Vec<f64>>,
        meta: TableMeta,
    ) -> Result<Self> {
        let exponent = model.alpha() - model.d() as f64;
        let far = fit_far_field(&window, &values, exponent)
            .unwrap_or(FarField {
                constant: riesz_constant(model),
                exponent,
            });
        GreenTable::assemble(model.spec(), model.alpha(), window, values, std_err, far, meta)
    }

    pub fn assemble(
        spec: ModelSpec,
        alpha: f64,
        window: SymmetricWindow,
        values: Vec<f64>,
        std_err: Option<Vec<f64>>,
        far: FarField,
        meta: TableMeta,
    ) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::Format(format!(
                "expected {} reduced values, got {}",
                window.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) || !far.constant.is_finite() {
            return Err(Error::Numeric("non-finite Green table entry".into()));
        }
        let dense = (0..window.orthant_len())
            .map(|i| values[window.orthant_key(i)])
            .collect();
        Ok(GreenTable {
            spec,
            alpha,
            window,
            values,
            dense,
            std_err,
            far,
            meta,
        })
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn d(&self) -> usize {
        self.window.d()
    }

    pub fn radius(&self) -> usize {
        self.window.radius()
    }

    pub fn window(&self) -> &SymmetricWindow {
        &self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn std_err(&self) -> Option<&[f64]> {
        self.std_err.as_deref()
    }

    pub fn far_field(&self) -> FarField {
        self.far
    }

    pub fn meta(&self) -> TableMeta {
        self.meta
    }

    pub fn origin(&self) -> f64 {
        self.values[0]
    }

    /// Check that the table belongs to `model`.
    pub fn check_model(&self, model: &WalkModel) -> Result<()> {
        if model.spec().kind != self.spec.kind
            || model.d() != self.d()
            || (model.alpha() - self.alpha).abs() > 1e-12
            || model.derived() != self.spec.derived
        {
            return Err(Error::Config(format!(
                "Green table was built for another model ({:?} alpha={}) than {model}",
                self.spec, self.alpha
            )));
        }
        Ok(())
    }

    /// `G(x)`: window lookup or far-field law.
    #[inline]
    pub fn at(&self, x: &Site) -> f64 {
        let d = self.d();
        let r = self.radius() as u64;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for j in 0..d {
            let a = x.coord(j).unsigned_abs();
            if a > r {
                let r2: f64 = (0..d)
                    .map(|i| {
                        let v = x.coord(i) as f64;
                        v * v
                    })
                    .sum();
                return self.far_at_sq(r2);
            }
            idx += a as usize * stride;
            stride *= r as usize + 1;
        }
        self.dense[idx]
    }

    /// `G(a - b)` without forming the difference in 64-bit arithmetic.
    #[inline]
    pub fn between(&self, a: &Site, b: &Site) -> f64 {
        let d = self.d();
        let r = self.radius() as u64;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for j in 0..d {
            let diff = a.coord(j).abs_diff(b.coord(j));
            if diff > r {
                let r2: f64 = (0..d)
                    .map(|i| {
                        let v = a.coord(i) as f64 - b.coord(i) as f64;
                        v * v
                    })
                    .sum();
                return self.far_at_sq(r2);
            }
            idx += diff as usize * stride;
            stride *= r as usize + 1;
        }
        self.dense[idx]
    }

    #[inline]
    fn far_at_sq(&self, r2: f64) -> f64 {
        self.far.constant * r2.powf(0.5 * self.far.exponent)
    }

    /// Far-field law evaluated at Euclidean norm `r`.
    pub fn far_at(&self, r: f64) -> f64 {
        self.far.constant * r.powf(self.far.exponent)
    }

    /// Largest relative gap between the far-field law and the table on the
    /// outer face `|x|_inf = R`.
    pub fn far_field_mismatch(&self) -> f64 {
        let r = self.radius() as u32;
        let mut worst: f64 = 0.0;
        for (i, k) in self.window.keys().enumerate() {
            if r > 0 && k[self.d() - 1] == r {
                let norm = k.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
                let rel = (self.far_at(norm) / self.values[i] - 1.0).abs();
                worst = worst.max(rel);
            }
        }
        worst
    }

    /// Standard error of a Monte Carlo table entry.
    pub fn std_err_at(&self, x: &Site) -> Option<f64> {
        let i = self.window.index_of(x)?;
        self.std_err.as_ref().map(|s| s[i])
    }
}

/// Least-squares constant for `G(x) ~ c |x|^exponent` on the outer shell.
fn fit_far_field(window: &SymmetricWindow, values: &[f64], exponent: f64) -> Option<FarField> {
    let r = window.radius() as u32;
    if r < 2 {
        return None;
    }
    let lo = r.div_ceil(2);
    let (mut num, mut den) = (0.0, 0.0);
    for (i, k) in window.keys().enumerate() {
        if k[window.d() - 1] >= lo {
            let w = window.multiplicity(i) as f64;
            let norm = k.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
            let basis = norm.powf(exponent);
            num += w * values[i] * basis;
            den += w * basis * basis;
        }
    }
    (den > 0.0 && num > 0.0).then(|| FarField {
        constant: num / den,
        exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_keys_and_orbits() {
        let w = SymmetricWindow::new(3, 2).unwrap();
        // C(R + d, d) keys
        assert_eq!(w.len(), 10);
        assert_eq!(w.key(0), &[0, 0, 0]);
        assert_eq!(w.key(1), &[0, 0, 1]);
        let total: u64 = (0..w.len()).map(|i| w.multiplicity(i)).sum();
        assert_eq!(total, 5u64.pow(3));
        let x = Site::from_coords(&[-1, 2, 0]).unwrap();
        let y = Site::from_coords(&[0, 1, -2]).unwrap();
        assert_eq!(w.index_of(&x), w.index_of(&y));
        assert_eq!(w.key(w.index_of(&x).unwrap()), &[0, 1, 2]);
        assert_eq!(w.index_of(&Site::from_coords(&[3, 0, 0]).unwrap()), None);
    }

    #[test]
    fn lookups_are_symmetric_and_use_the_far_field() {
        let model = WalkModel::subordinate(3, 0.8).unwrap();
        let w = SymmetricWindow::new(3, 4).unwrap();
        let c = riesz_constant(&model);
        let values: Vec<f64> = w
            .keys()
            .map(|k| {
                let r = k.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
                if r == 0.0 {
                    1.2
                } else {
                    c * r.powf(-2.2)
                }
            })
            .collect();
        let meta = TableMeta {
            method: GreenMethod::FourierGrid { n: 16 },
            error: 0.0,
            loop_prob: model.loop_prob(),
        };
        let t = GreenTable::from_reduced(&model, w, values, None, meta).unwrap();
        assert!((t.far_field().constant / c - 1.0).abs() < 1e-12);
        assert!(t.far_field_mismatch() < 1e-12);
        let a = Site::from_coords(&[1, -3, 2]).unwrap();
        assert_eq!(t.at(&a), t.at(&a.neg().unwrap()));
        let far = Site::from_coords(&[100, 0, 0]).unwrap();
        assert!((t.at(&far) - c * 100f64.powf(-2.2)).abs() < 1e-15);
        let big = Site::from_coords(&[i64::MAX, 0, 0]).unwrap();
        let small = Site::from_coords(&[i64::MIN, 0, 0]).unwrap();
        assert!(t.between(&big, &small) > 0.0);
        assert_eq!(t.between(&a, &Site::ORIGIN), t.at(&a));
    }
}
