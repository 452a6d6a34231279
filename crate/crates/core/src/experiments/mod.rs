//! Seeded Monte Carlo experiments.
//!
//! Every path is generated from its own stream `(seed, purpose, index)` and
//! results are gathered in index order, so a report is a pure function of
//! the configuration and does not depend on the number of worker threads.

pub mod config;
pub mod report;
pub mod stats;

mod clt;
mod lln;
mod loops;
mod scaling;
mod transience;
mod variance;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use clt::{clt_statistics, run_clt, CltStatistics};
pub use config::{default_radius, ExperimentConfig, StatOptions, TableSource, Thresholds};
pub use lln::run_lln;
pub use loops::{coupled_ranges_agree, run_loop_equivalence};
pub use report::{Estimate, ExperimentOutput, ExperimentReport, SampleRow};
pub use scaling::{cross_sums_by_horizon, run_error_scaling};
pub use transience::run_transience_diag;
pub use variance::{fourth_moment_ratio, run_moment4, run_variance};

use crate::capacity::KernelSystem;
use crate::error::{Error, Result};
use crate::green::GreenTable;
use crate::range::range_of;
use crate::rng::{Purpose, RngStream, StreamId};
use crate::walk::{sample_path, LatticePath, WalkModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Lln,
    Variance,
    Clt,
    ErrorScaling,
    Moment4,
    LoopEquivalence,
    Transience,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Lln => "lln",
            Experiment::Variance => "variance",
            Experiment::Clt => "clt",
            Experiment::ErrorScaling => "error-scaling",
            Experiment::Moment4 => "moment4",
            Experiment::LoopEquivalence => "loop-equivalence",
            Experiment::Transience => "transience",
        }
    }
}

/// Run an experiment on a pool with the configured number of workers.
pub fn run(experiment: Experiment, config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    with_workers(config.workers, || match experiment {
        Experiment::Lln => run_lln(config),
        Experiment::Variance => run_variance(config),
        Experiment::Clt => run_clt(config),
        Experiment::ErrorScaling => run_error_scaling(config),
        Experiment::Moment4 => run_moment4(config),
        Experiment::LoopEquivalence => run_loop_equivalence(config),
        Experiment::Transience => run_transience_diag(config),
    })
}

/// Run `f` on a dedicated thread pool when a worker count is given.
pub fn with_workers<T: Send, F: FnOnce() -> Result<T> + Send>(workers: Option<usize>, f: F) -> Result<T> {
    match workers {
        None => f(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Resource(format!("thread pool: {e}")))?
            .install(f),
    }
}

/// `f(i)` for `i in 0..count`, in parallel, collected in index order.
pub(crate) fn par_indexed<T: Send, F: Fn(u64) -> Result<T> + Sync + Send>(count: u64, f: F) -> Result<Vec<T>> {
    (0..count).into_par_iter().map(f).collect()
}

pub(crate) fn path_for(model: &WalkModel, purpose: Purpose, seed: u64, index: u64, n: u64) -> Result<LatticePath> {
    let mut rng = RngStream::new(seed, StreamId::new(purpose, index));
    sample_path(model, n as usize, &mut rng)
}

/// Capacity statistics of one path at one horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapacityRecord {
    pub n: u64,
    pub capacity: f64,
    pub range_size: u64,
    /// `1 / J(nu_n)` for the occupation measure of `S_1..S_n`.
    pub occupation_bound: f64,
    /// The iterative solver stopped at its cap.
    pub flagged: bool,
}

/// `C_n`, `#R_n` and the occupation bound at every horizon of the grid,
/// from one kernel matrix over the range at the largest horizon.
pub fn capacity_records(path: &LatticePath, grid: &[u64], table: &GreenTable) -> Result<Vec<CapacityRecord>> {
    let top = *grid.last().expect("nonempty grid") as usize;
    let full = range_of(path, 0, top)?;
    let system = KernelSystem::new(table, full.sites())?;
    let pos = path.positions();
    let first: Vec<usize> = pos[..=top].iter().map(|x| full.position(x).unwrap()).collect();
    let mut out = Vec::with_capacity(grid.len());
    let mut counts = vec![0u64; full.len()];
    let mut size = 1usize;
    let mut t = 0usize;
    for &n in grid {
        let n = n as usize;
        while t < n {
            t += 1;
            counts[first[t]] += 1;
            size = size.max(first[t] + 1);
        }
        let (cap, _) = system.capacity_of_prefix(size)?;
        // J(nu_n) = n^-2 sum_{x, y} c(x) c(y) G(x - y) over the prefix.
        let active: Vec<usize> = (0..size).filter(|&i| counts[i] > 0).collect();
        let rows: Vec<f64> = active
            .par_iter()
            .map(|&i| {
                let s: f64 = active.iter().map(|&j| system.entry(i, j) * counts[j] as f64).sum();
                s * counts[i] as f64
            })
            .collect();
        let j: f64 = rows.iter().sum::<f64>() / (n as f64 * n as f64);
        out.push(CapacityRecord {
            n: n as u64,
            capacity: cap.value,
            range_size: size as u64,
            occupation_bound: 1.0 / j,
            flagged: cap.flagged,
        });
    }
    Ok(out)
}

/// [`capacity_records`] for paths `0..paths` of the given stream purpose.
pub fn simulate_capacities(
    model: &WalkModel,
    purpose: Purpose,
    config: &ExperimentConfig,
    table: &GreenTable,
) -> Result<Vec<Vec<CapacityRecord>>> {
    let top = *config.grid.last().unwrap();
    par_indexed(config.paths, |i| {
        let path = path_for(model, purpose, config.seed, i, top)?;
        capacity_records(&path, &config.grid, table)
    })
}

/// Column `k` (one horizon) of per-path records.
pub(crate) fn column(records: &[Vec<CapacityRecord>], k: usize) -> Vec<f64> {
    records.iter().map(|r| r[k].capacity).collect()
}

pub(crate) fn capacity_samples(series: &'static str, records: &[Vec<CapacityRecord>]) -> Vec<SampleRow> {
    let mut out = Vec::new();
    for (i, rs) in records.iter().enumerate() {
        for r in rs {
            out.push(SampleRow {
                series,
                path_id: i as u64,
                n: r.n,
                value: r.capacity,
                range_size: Some(r.range_size),
            });
        }
    }
    out
}

pub(crate) fn count_flagged(records: &[Vec<CapacityRecord>]) -> usize {
    records.iter().flatten().filter(|r| r.flagged).count()
}

/// Refuse runs outside the regime where the limit theorem is stated unless
/// explicitly allowed.
pub(crate) fn require_clt_regime(model: &WalkModel, allow_override: bool, what: &str) -> Result<()> {
    let d = model.d() as f64;
    let alpha = model.alpha();
    if d > 2.5 * alpha {
        return Ok(());
    }
    if allow_override && model.is_transient() && what != "clt" {
        log::warn!("{what} run outside d > 5 alpha / 2 by override");
        return Ok(());
    }
    Err(Error::Config(format!(
        "{what} needs d > 5 alpha / 2 (d = {}, alpha = {alpha}){}",
        model.d(),
        if what == "clt" { "" } else { "; set allow_weak_regime to explore anyway" }
    )))
}
