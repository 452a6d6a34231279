//! Capacities of finite sets.
//!
//! For a symmetric transient walk the equilibrium measure `e` of a finite
//! set `A` solves `sum_{y in A} G(x - y) e(y) = 1` for `x in A`, with
//! `e(x) = P_x(T_A^+ = inf)`, and `Cap(A) = sum_x e(x)`. The same system is
//! the optimality condition of `1 / Cap(A) = min_nu nu' G nu` over
//! probability vectors on `A`.

use log::warn;
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::GreenTable;
use crate::lattice::Site;
use crate::linalg::{solve_direct, solve_pcg, DenseView, KernelOperator, SolveOutcome, SymOperator};
use crate::range::{green_sum, SiteSet};
use crate::rng::{Purpose, RngStream, StreamId};
use crate::walk::{LatticePath, WalkModel};

/// Sets up to this size are solved by Cholesky factorisation.
pub const DIRECT_LIMIT: usize = 512;
/// Relative residual at which conjugate gradients stop.
pub const CG_TOLERANCE: f64 = 1e-10;
const CG_BLOCK: usize = 64;
const CLAMP_WARN: f64 = -1e-9;
const CLAMP_FAIL: f64 = -1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMethod {
    Exact,
    Mc,
    OccupationBound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub std_err: f64,
    pub method: CapacityMethod,
    /// Number of sites for exact solves, number of trials for Monte Carlo,
    /// path length for the occupation bound.
    pub samples: u64,
    /// Largest simulated horizon (Monte Carlo only).
    pub horizon: u64,
    /// Monte Carlo: the horizon cap was reached before the return hazard
    /// became negligible. Exact: the iterative solver hit its cap.
    pub flagged: bool,
}

impl CapacityEstimate {
    fn exact(value: f64, sites: usize, flagged: bool) -> Self {
        CapacityEstimate {
            value,
            std_err: 0.0,
            method: CapacityMethod::Exact,
            samples: sites as u64,
            horizon: 0,
            flagged,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumMeasure {
    pub sites: Vec<Site>,
    pub escape: Vec<f64>,
    pub capacity: f64,
    /// `max_x |sum_y G(x - y) e(y) - 1|`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// The kernel `[G(x - y)]` on an ordered site list. Leading blocks are the
/// kernels of the prefixes of the list.
pub struct KernelSystem<'a> {
    table: &'a GreenTable,
    sites: Vec<Site>,
    /// Dense row-major matrix when it fits the memory budget.
    dense: Option<Vec<f64>>,
}

impl<'a> KernelSystem<'a> {
    /// `sites` must be distinct.
    pub fn new(table: &'a GreenTable, sites: &[Site]) -> Result<Self> {
        let n = sites.len();
        let bytes = (n as u128) * (n as u128) * 8;
        let dense = if n > DIRECT_LIMIT && crate::limits::check_allocation("kernel matrix", bytes).is_err() {
            None
        } else {
            crate::limits::check_allocation("kernel matrix", bytes)?;
            let mut m = vec![0.0; n * n];
            m.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = table.between(&sites[i], &sites[j]);
                }
            });
            Some(m)
        };
        Ok(KernelSystem {
            table,
            sites: sites.to_vec(),
            dense,
        })
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

    fn solve_with<A: SymOperator>(op: &A, b: &[f64]) -> Result<SolveOutcome> {
        let n = op.dim();
        if n <= DIRECT_LIMIT {
            solve_direct(op, b).map_err(|e| match e {
                Error::Numeric(msg) => Error::Numeric(format!(
                    "{msg}; smallest eigenvalue estimate {:e}",
                    smallest_eigenvalue(op)
                )),
                other => other,
            })
        } else {
            let cap = (10.0 * (n as f64).sqrt()).ceil() as usize;
            solve_pcg(op, b, CG_TOLERANCE, cap, CG_BLOCK)
        }
    }

    /// Equilibrium measure of the first `k` sites.
    pub fn equilibrium_prefix(&self, k: usize) -> Result<EquilibriumMeasure> {
        assert!(k <= self.len());
        if k == 0 {
            return Ok(EquilibriumMeasure {
                sites: Vec::new(),
                escape: Vec::new(),
                capacity: 0.0,
                residual: 0.0,
                iterations: 0,
                converged: true,
            });
        }
        let ones = vec![1.0; k];
        let out = match &self.dense {
            Some(m) => Self::solve_with(
                &DenseView {
                    data: m,
                    lda: self.len(),
                    n: k,
                },
                &ones,
            )?,
            None => {
                let sites = &self.sites;
                let table = self.table;
                Self::solve_with(
                    &KernelOperator {
                        n: k,
                        kernel: move |i: usize, j: usize| table.between(&sites[i], &sites[j]),
                    },
                    &ones,
                )?
            }
        };
        let mut escape = out.x;
        let worst = escape.iter().copied().fold(f64::INFINITY, f64::min);
        if worst < CLAMP_FAIL {
            return Err(Error::Numeric(format!(
                "escape probability {worst:e} is negative; the Green table is too coarse for this set"
            )));
        }
        if worst < CLAMP_WARN {
            warn!("clamping negative escape probabilities (min {worst:e}) to zero");
        }
        for e in escape.iter_mut() {
            if *e < 0.0 {
                *e = 0.0;
            }
        }
        let residual = self.max_residual(k, &escape);
        if !out.converged {
            warn!(
                "conjugate gradients stopped at the iteration cap ({} iterations, relative residual {:e})",
                out.iterations, out.rel_residual
            );
        }
        Ok(EquilibriumMeasure {
            sites: self.sites[..k].to_vec(),
            capacity: escape.iter().sum(),
            escape,
            residual,
            iterations: out.iterations,
            converged: out.converged,
        })
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.dense {
            Some(m) => m[i * self.len() + j],
            None => self.table.between(&self.sites[i], &self.sites[j]),
        }
    }

    fn max_residual(&self, k: usize, e: &[f64]) -> f64 {
        (0..k)
            .into_par_iter()
            .map(|i| {
                let s: f64 = (0..k).map(|j| self.entry(i, j) * e[j]).sum();
                (s - 1.0).abs()
            })
            .reduce(|| 0.0, f64::max)
    }

    pub fn capacity_of_prefix(&self, k: usize) -> Result<(CapacityEstimate, EquilibriumMeasure)> {
        let m = self.equilibrium_prefix(k)?;
        Ok((CapacityEstimate::exact(m.capacity, k, !m.converged), m))
    }
}

fn smallest_eigenvalue<A: SymOperator>(op: &A) -> f64 {
    let n = op.dim().min(64);
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = op.entry(i, j);
        }
    }
    crate::linalg::min_eigenvalue(&m, n)
}

fn distinct(sites: &[Site]) -> Vec<Site> {
    sites.iter().copied().collect::<SiteSet>().sites().to_vec()
}

/// Exact capacity by solving the equilibrium system. Repeated sites count
/// once.
pub fn capacity_exact(sites: &[Site], table: &GreenTable) -> Result<(CapacityEstimate, EquilibriumMeasure)> {
    let a = distinct(sites);
    KernelSystem::new(table, &a)?.capacity_of_prefix(a.len())
}

/// `nu' G nu` for a measure on `sites`.
pub fn energy(table: &GreenTable, sites: &[Site], nu: &[f64]) -> f64 {
    let rows: Vec<f64> = sites
        .par_iter()
        .zip(nu)
        .map(|(x, &wx)| {
            let s: f64 = sites.iter().zip(nu).map(|(y, &wy)| table.between(x, y) * wy).sum();
            wx * s
        })
        .collect();
    // Summed in index order so the result does not depend on the thread count.
    rows.iter().sum()
}

/// Horizons used by [`escape_prob_mc`]: `initial, 2 initial, ...` up to
/// `max`. Doubling stops once the fraction of paths returning during the
/// last doubling window falls below `hazard_fraction` standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonSchedule {
    pub initial: u64,
    pub max: u64,
    pub hazard_fraction: f64,
}

impl Default for HorizonSchedule {
    fn default() -> Self {
        HorizonSchedule {
            initial: 16,
            max: 1 << 16,
            hazard_fraction: 0.1,
        }
    }
}

impl HorizonSchedule {
    /// A single fixed horizon.
    pub fn fixed(h: u64) -> Self {
        HorizonSchedule {
            initial: h,
            max: h,
            hazard_fraction: 0.0,
        }
    }
}

/// Estimate of `P_x(T_A^+ > h)`: the fraction of `trials` paths from `x`
/// that do not come back to `A` by the final horizon. This over-estimates
/// the escape probability by the chance of a later return.
///
/// Path `i` uses stream `(Escape, stream_base + i)`.
pub fn escape_prob_mc(
    set: &[Site],
    x: &Site,
    model: &WalkModel,
    schedule: HorizonSchedule,
    trials: u64,
    seed: u64,
    stream_base: u64,
) -> Result<CapacityEstimate> {
    model.check_transient()?;
    let members: FxHashSet<Site> = set.iter().copied().collect();
    if !members.contains(x) {
        return Err(Error::Domain("starting site is not in the set".into()));
    }
    if trials == 0 {
        return Err(Error::Config("escape estimate needs at least one trial".into()));
    }
    if schedule.max == 0 {
        return Ok(CapacityEstimate {
            value: 1.0,
            std_err: 0.0,
            method: CapacityMethod::Mc,
            samples: trials,
            horizon: 0,
            flagged: false,
        });
    }
    crate::limits::check_allocation("escape walkers", trials as u128 * 400)?;
    struct Walker {
        pos: Site,
        rng: RngStream,
        returned: bool,
    }
    let mut walkers: Vec<Walker> = (0..trials)
        .map(|i| Walker {
            pos: *x,
            rng: RngStream::new(seed, StreamId::new(Purpose::Escape, stream_base + i)),
            returned: false,
        })
        .collect();
    let m = trials as f64;
    let mut t = 0u64;
    let mut h = schedule.initial.clamp(1, schedule.max);
    let mut escaped = trials;
    let flagged;
    loop {
        let steps = h - t;
        let returns: u64 = walkers
            .par_iter_mut()
            .map(|w| -> Result<u64> {
                if w.returned {
                    return Ok(0);
                }
                for _ in 0..steps {
                    w.pos = w.pos.checked_add(&model.sample_increment(&mut w.rng)?)?;
                    if members.contains(&w.pos) {
                        w.returned = true;
                        return Ok(1);
                    }
                }
                Ok(0)
            })
            .collect::<Result<Vec<u64>>>()?
            .into_iter()
            .sum();
        escaped -= returns;
        t = h;
        let p = escaped as f64 / m;
        let se = (p * (1.0 - p) / m).sqrt().max(1.0 / m);
        // The first window has no earlier estimate to compare with.
        let settled = h > schedule.initial && (returns as f64 / m) < schedule.hazard_fraction * se;
        if settled {
            flagged = false;
            break;
        }
        if h >= schedule.max {
            // A fixed horizon is not a truncation the caller needs warning about.
            flagged = schedule.initial < schedule.max;
            break;
        }
        h = (2 * h).min(schedule.max);
    }
    let p = escaped as f64 / m;
    Ok(CapacityEstimate {
        value: p,
        std_err: (p * (1.0 - p) / (m - 1.0).max(1.0)).sqrt(),
        method: CapacityMethod::Mc,
        samples: trials,
        horizon: t,
        flagged,
    })
}

/// `Cap(A)` as the sum of Monte Carlo escape probabilities. Site `i` of the
/// distinct sites uses streams `i * trials ..`.
pub fn capacity_mc(
    sites: &[Site],
    model: &WalkModel,
    schedule: HorizonSchedule,
    trials: u64,
    seed: u64,
) -> Result<CapacityEstimate> {
    let a = distinct(sites);
    let mut value = 0.0;
    let mut var = 0.0;
    let mut horizon = 0;
    let mut flagged = false;
    for (i, x) in a.iter().enumerate() {
        let e = escape_prob_mc(&a, x, model, schedule, trials, seed, i as u64 * trials)?;
        value += e.value;
        var += e.std_err * e.std_err;
        horizon = horizon.max(e.horizon);
        flagged |= e.flagged;
    }
    Ok(CapacityEstimate {
        value,
        std_err: var.sqrt(),
        method: CapacityMethod::Mc,
        samples: trials * a.len() as u64,
        horizon,
        flagged,
    })
}

/// `1 / J(nu_n)` with `nu_n` the occupation measure of `S_1, ..., S_n`.
/// Never exceeds `Cap(R[1, n])`.
pub fn occupation_lower_bound(path: &LatticePath, table: &GreenTable) -> Result<CapacityEstimate> {
    let n = path.horizon();
    if n == 0 {
        return Err(Error::Domain("occupation bound needs a path of length at least 1".into()));
    }
    let mut counts: Vec<(Site, f64)> = Vec::new();
    let mut index = SiteSet::new();
    for x in &path.positions()[1..] {
        if index.insert(*x) {
            counts.push((*x, 1.0));
        } else {
            counts[index.position(x).unwrap()].1 += 1.0;
        }
    }
    let nu: Vec<f64> = counts.iter().map(|c| c.1 / n as f64).collect();
    let j = energy(table, index.sites(), &nu);
    Ok(CapacityEstimate {
        value: 1.0 / j,
        std_err: 0.0,
        method: CapacityMethod::OccupationBound,
        samples: n as u64,
        horizon: 0,
        flagged: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub cap_a: f64,
    pub cap_b: f64,
    pub cap_union: f64,
    pub cap_intersection: f64,
    pub cross: f64,
    /// `Cap(A u B) - Cap(A) - Cap(B) + 2 G(A, B)`.
    pub lower_slack: f64,
    /// `Cap(A) + Cap(B) - Cap(A n B) - Cap(A u B)`.
    pub upper_slack: f64,
}

/// Both sides of the union/intersection bounds for `Cap(A u B)`.
pub fn check_decomposition(a: &[Site], b: &[Site], table: &GreenTable) -> Result<Decomposition> {
    let sa: SiteSet = a.iter().copied().collect();
    let sb: SiteSet = b.iter().copied().collect();
    let union = sa.union(&sb);
    let inter = sa.intersection(&sb);
    let cap = |s: &SiteSet| -> Result<f64> { Ok(capacity_exact(s.sites(), table)?.0.value) };
    let cap_a = cap(&sa)?;
    let cap_b = cap(&sb)?;
    let cap_union = cap(&union)?;
    let cap_intersection = cap(&inter)?;
    let cross = green_sum(table, sa.sites(), sb.sites());
    Ok(Decomposition {
        cap_a,
        cap_b,
        cap_union,
        cap_intersection,
        cross,
        lower_slack: cap_union - (cap_a + cap_b - 2.0 * cross),
        upper_slack: cap_a + cap_b - cap_intersection - cap_union,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::default_table;

    fn s(c: &[i64]) -> Site {
        Site::from_coords(c).unwrap()
    }

    #[test]
    fn small_closed_forms() {
        let m = WalkModel::subordinate(3, 0.8).unwrap();
        let t = default_table(&m, 6).unwrap();
        let (c0, _) = capacity_exact(&[], &t).unwrap();
        assert_eq!(c0.value, 0.0);
        let (c1, e1) = capacity_exact(&[Site::ORIGIN], &t).unwrap();
        assert!((c1.value - 1.0 / t.origin()).abs() < 1e-15);
        assert!(e1.residual < 1e-14);
        let x = s(&[2, -1, 0]);
        let (c2, e2) = capacity_exact(&[Site::ORIGIN, x], &t).unwrap();
        let gx = t.at(&x);
        assert!((c2.value - 2.0 / (t.origin() + gx)).abs() < 1e-14);
        assert!((e2.escape[0] - e2.escape[1]).abs() < 1e-15);
        let d = check_decomposition(&[Site::ORIGIN], &[x], &t).unwrap();
        let closed = 2.0 / (t.origin() + gx) - 2.0 / t.origin() + 2.0 * gx;
        assert!((d.lower_slack - closed).abs() < 1e-14);
        let same = check_decomposition(&[Site::ORIGIN, x], &[Site::ORIGIN, x], &t).unwrap();
        assert!(same.upper_slack.abs() < 1e-14);
    }

    #[test]
    fn direct_and_iterative_solvers_agree() {
        let m = WalkModel::subordinate(3, 1.1).unwrap();
        let t = default_table(&m, 8).unwrap();
        let mut rng = RngStream::new(5, StreamId::new(Purpose::Test, 0));
        let mut sites = vec![Site::ORIGIN];
        while sites.len() < 600 {
            let last = *sites.last().unwrap();
            let next = last.checked_add(&m.sample_increment(&mut rng).unwrap()).unwrap();
            if !sites.contains(&next) {
                sites.push(next);
            }
        }
        let sys = KernelSystem::new(&t, &sites).unwrap();
        let big = sys.equilibrium_prefix(600).unwrap();
        assert!(big.converged, "cg did not converge");
        assert!(big.residual < 1e-8 * 600.0);
        let ones = vec![1.0; 600];
        let direct = solve_direct(
            &DenseView {
                data: sys.dense.as_ref().unwrap(),
                lda: 600,
                n: 600,
            },
            &ones,
        )
        .unwrap();
        let cap_direct: f64 = direct.x.iter().sum();
        assert!((big.capacity - cap_direct).abs() < 1e-7 * cap_direct);
    }

    #[test]
    fn zero_horizon_escape_is_one() {
        let m = WalkModel::subordinate(3, 0.8).unwrap();
        let e = escape_prob_mc(&[Site::ORIGIN], &Site::ORIGIN, &m, HorizonSchedule::fixed(0), 10, 1, 0).unwrap();
        assert_eq!(e.value, 1.0);
    }
}
