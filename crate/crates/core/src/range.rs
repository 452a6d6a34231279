//! Range sets of paths, Green cross sums and the dyadic decomposition check.

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::capacity::{capacity_exact, CapacityEstimate, KernelSystem};
use crate::error::{Error, Result};
use crate::green::GreenTable;
use crate::lattice::Site;
use crate::numerics::FixedSum;
use crate::walk::LatticePath;

/// A finite set of sites kept in insertion order.
#[derive(Clone, Debug, Default)]
pub struct SiteSet {
    sites: Vec<Site>,
    index: FxHashMap<Site, u32>,
}

impl SiteSet {
    pub fn new() -> Self {
        SiteSet::default()
    }

    /// Insert `x`; returns false if it was already present.
    pub fn insert(&mut self, x: Site) -> bool {
        if self.index.contains_key(&x) {
            return false;
        }
        self.index.insert(x, self.sites.len() as u32);
        self.sites.push(x);
        true
    }

    pub fn contains(&self, x: &Site) -> bool {
        self.index.contains_key(x)
    }

    pub fn position(&self, x: &Site) -> Option<usize> {
        self.index.get(x).map(|&i| i as usize)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Site> {
        self.sites.iter()
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        let mut out = self.clone();
        for x in other.iter() {
            out.insert(*x);
        }
        out
    }

    pub fn intersection(&self, other: &SiteSet) -> SiteSet {
        self.iter().filter(|x| other.contains(x)).copied().collect()
    }

    pub fn translated(&self, by: &Site) -> Result<SiteSet> {
        let mut out = SiteSet::new();
        for x in self.iter() {
            out.insert(x.checked_add(by)?);
        }
        Ok(out)
    }

    /// Same elements, ignoring order.
    pub fn same_elements(&self, other: &SiteSet) -> bool {
        self.len() == other.len() && self.iter().all(|x| other.contains(x))
    }
}

impl FromIterator<Site> for SiteSet {
    fn from_iter<I: IntoIterator<Item = Site>>(iter: I) -> Self {
        let mut s = SiteSet::new();
        for x in iter {
            s.insert(x);
        }
        s
    }
}


/// `R[m, n]`: sites of `S_m..=S_n` not visited before time `m`.
pub fn range_of(path: &LatticePath, m: usize, n: usize) -> Result<SiteSet> {
    if m > n || n > path.horizon() {
        return Err(Error::Domain(format!(
            "range indices need 0 <= m <= n <= {}, got m = {m}, n = {n}",
            path.horizon()
        )));
    }
    let pos = path.positions();
    let before: SiteSet = pos[..m].iter().copied().collect();
    Ok(pos[m..=n].iter().filter(|x| !before.contains(x)).copied().collect())
}

/// Sites visited at times `a..=b`, without excluding earlier visits.
pub fn segment_sites(path: &LatticePath, a: usize, b: usize) -> SiteSet {
    path.positions()[a..=b].iter().copied().collect()
}

/// `G(A, B) = sum_{x in A, y in B} G(x - y)`.
///
/// Terms are accumulated in fixed point, so the result does not depend on
/// the order of summation: it is exactly symmetric in `A`, `B` and exactly
/// additive over disjoint unions.
pub fn green_sum(table: &GreenTable, a: &[Site], b: &[Site]) -> f64 {
    green_sum_fixed(table, a, b).to_f64()
}

/// [`green_sum`] before rounding to `f64`.
pub fn green_sum_fixed(table: &GreenTable, a: &[Site], b: &[Site]) -> FixedSum {
    a
        .par_chunks(64)
        .map(|chunk| {
            let mut acc = FixedSum::ZERO;
            for x in chunk {
                for y in b {
                    acc.add_f64(table.between(x, y));
                }
            }
            acc
        })
        .reduce(|| FixedSum::ZERO, |p, q| p + q)
}

/// `C_n = Cap(R_n)`.
pub fn range_capacity(path: &LatticePath, n: usize, table: &GreenTable) -> Result<CapacityEstimate> {
    let r = range_of(path, 0, n)?;
    Ok(capacity_exact(r.sites(), table)?.0)
}

/// Capacities `C_n` at several horizons of one path, sharing one kernel
/// matrix: the range at time `n` is a prefix of the first-visit ordering.
pub fn range_capacities(
    path: &LatticePath,
    horizons: &[usize],
    table: &GreenTable,
) -> Result<Vec<CapacityEstimate>> {
    let top = horizons.iter().copied().max().unwrap_or(0);
    let full = range_of(path, 0, top)?;
    let mut prefix_len = Vec::with_capacity(horizons.len());
    for &h in horizons {
        // Number of distinct sites among S_0..=S_h.
        let len = path.positions()[..=h]
            .iter()
            .map(|x| full.position(x).unwrap())
            .max()
            .unwrap()
            + 1;
        prefix_len.push(len);
    }
    let system = KernelSystem::new(table, full.sites())?;
    prefix_len.iter().map(|&k| Ok(system.capacity_of_prefix(k)?.0)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DyadicCheck {
    pub n: usize,
    pub levels: u32,
    pub capacity: f64,
    /// `Cap` of each of the `2^L` re-centered segments.
    pub segment_capacities: Vec<f64>,
    /// Cross terms `G(left, right)` of the merges, listed per level.
    pub error_terms: Vec<Vec<f64>>,
    pub lower_slack: f64,
    pub upper_slack: f64,
}

/// Segment boundaries `t_j = floor(j n / 2^l)`.
fn boundaries(n: usize, parts: usize) -> Vec<usize> {
    (0..=parts).map(|j| j * n / parts).collect()
}

/// Pathwise dyadic decomposition of `C_n` into `2^L` segment capacities.
///
/// Segment `i` covers the times `t_{i-1}..=t_i`, so consecutive segments
/// share their endpoint and segments at one level are unions of segments at
/// the next.
pub fn dyadic_check(path: &LatticePath, n: usize, levels: u32, table: &GreenTable) -> Result<DyadicCheck> {
    if levels >= usize::BITS || (1usize << levels) > n.max(1) || n > path.horizon() {
        return Err(Error::Domain(format!(
            "dyadic check needs 2^L <= n <= horizon, got L = {levels}, n = {n}"
        )));
    }
    let parts = 1usize << levels;
    let capacity = range_capacity(path, n, table)?.value;
    let t = boundaries(n, parts);
    let pos = path.positions();
    let segment_capacities = (0..parts)
        .into_par_iter()
        .map(|i| {
            let start = pos[t[i]];
            let set = segment_sites(path, t[i], t[i + 1]);
            let shifted = set.translated(&start.neg()?)?;
            Ok(capacity_exact(shifted.sites(), table)?.0.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut error_terms = Vec::with_capacity(levels as usize);
    for l in 1..=levels {
        let tl = boundaries(n, 1 << l);
        let terms: Vec<f64> = (0..1usize << (l - 1))
            .map(|i| {
                let left = segment_sites(path, tl[2 * i], tl[2 * i + 1]);
                let right = segment_sites(path, tl[2 * i + 1], tl[2 * i + 2]);
                green_sum(table, left.sites(), right.sites())
            })
            .collect();
        error_terms.push(terms);
    }
    let sum_caps: f64 = segment_capacities.iter().sum();
    let sum_err: f64 = error_terms.iter().flatten().sum();
    Ok(DyadicCheck {
        n,
        levels,
        capacity,
        lower_slack: capacity - (sum_caps - 2.0 * sum_err),
        upper_slack: sum_caps - capacity,
        segment_capacities,
        error_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::default_table;
    use crate::walk::WalkModel;

    fn path1(xs: &[i64]) -> LatticePath {
        LatticePath::from_positions(
            1,
            xs.iter().map(|&v| Site::from_coords(&[v]).unwrap()).collect(),
            None,
        )
    }

    #[test]
    fn set_difference_semantics() {
        let p = path1(&[0, 1, 0, -1]);
        let r = range_of(&p, 2, 3).unwrap();
        assert_eq!(r.sites(), &[Site::from_coords(&[-1]).unwrap()]);
        assert_eq!(range_of(&p, 0, 3).unwrap().len(), 3);
        assert!(range_of(&p, 3, 2).is_err());
        assert!(range_of(&p, 0, 4).is_err());
        let c = path1(&[0, 0, 0]);
        assert_eq!(range_of(&c, 0, 2).unwrap().len(), 1);
    }

    #[test]
    fn green_sum_is_symmetric_and_additive() {
        let m = WalkModel::subordinate(3, 0.8).unwrap();
        let t = default_table(&m, 4).unwrap();
        let s = |c: [i64; 3]| Site::from_coords(&c).unwrap();
        let a = vec![s([0, 0, 0]), s([1, 2, 0]), s([9, -3, 1])];
        let b1 = vec![s([1, 0, 0]), s([40, 0, 2])];
        let b2 = vec![s([-2, 2, 2])];
        let b: Vec<Site> = b1.iter().chain(&b2).copied().collect();
        assert_eq!(green_sum(&t, &a, &b), green_sum(&t, &b, &a));
        let split = green_sum_fixed(&t, &a, &b1) + green_sum_fixed(&t, &a, &b2);
        assert_eq!(green_sum_fixed(&t, &a, &b), split);
        assert_eq!(green_sum(&t, &[Site::ORIGIN], &[Site::ORIGIN]), t.origin());
    }
}
