//! Growth of the error terms `G(R_n, R'_n)` against `h_d(n)`.

use rayon::prelude::*;

use super::report::{Estimate, ExperimentOutput, ExperimentReport, SampleRow};
use super::stats::mean_se;
use super::{par_indexed, path_for, ExperimentConfig};
use crate::error::{Error, Result};
use crate::green::{Asymptotics, ErrorRegime, GreenTable};
use crate::lattice::Site;
use crate::numerics::{linear_fit, FixedSum};
use crate::range::{green_sum, range_of, segment_sites};
use crate::rng::Purpose;
use crate::walk::LatticePath;

/// Distinct sites of `S_0..=S_N` (N the last horizon) with the index of the
/// first horizon whose range contains them.
fn leveled_range(path: &LatticePath, grid: &[u64]) -> Result<Vec<(Site, usize)>> {
    let top = *grid.last().unwrap() as usize;
    let r = range_of(path, 0, top)?;
    let mut first = vec![usize::MAX; r.len()];
    for (t, x) in path.positions()[..=top].iter().enumerate() {
        let i = r.position(x).unwrap();
        if first[i] == usize::MAX {
            first[i] = t;
        }
    }
    Ok(r
        .iter()
        .zip(first)
        .map(|(x, t)| (*x, grid.partition_point(|&n| (n as usize) < t)))
        .collect())
}

/// Cumulative sums over levels `<= k` of a `levels x levels` matrix.
fn nested_totals(blocks: &[FixedSum], levels: usize) -> Vec<f64> {
    (0..levels)
        .map(|k| {
            let mut acc = FixedSum::ZERO;
            for a in 0..=k {
                for b in 0..=k {
                    acc += blocks[a * levels + b];
                }
            }
            acc.to_f64()
        })
        .collect()
}

fn leveled_sums(table: &GreenTable, a: &[(Site, usize)], b: &[(Site, usize)], levels: usize) -> Vec<f64> {
    let blocks = a
        .par_chunks(64)
        .map(|chunk| {
            let mut m = vec![FixedSum::ZERO; levels * levels];
            for (x, la) in chunk {
                for (y, lb) in b {
                    m[la * levels + lb].add_f64(table.between(x, y));
                }
            }
            m
        })
        .reduce(
            || vec![FixedSum::ZERO; levels * levels],
            |mut p, q| {
                for (u, v) in p.iter_mut().zip(q) {
                    *u += v;
                }
                p
            },
        );
    nested_totals(&blocks, levels)
}

/// `G(R_n, R'_n)` for every `n` of the grid, from one pass over the ranges
/// at the last horizon. Horizons may include 0.
pub fn cross_sums_by_horizon(table: &GreenTable, a: &LatticePath, b: &LatticePath, grid: &[u64]) -> Result<Vec<f64>> {
    let ra = leveled_range(a, grid)?;
    let rb = leveled_range(b, grid)?;
    Ok(leveled_sums(table, &ra, &rb, grid.len()))
}

struct PairStats {
    cross: Vec<f64>,
    own: Vec<f64>,
    tail: Vec<f64>,
}

/// Log-log slope of `h_d` over the grid, the prediction for the slope of
/// `E[G(R_n, R'_n)]`.
fn predicted_slope(asym: &Asymptotics, grid: &[u64]) -> Result<f64> {
    let x: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = grid.iter().map(|&n| asym.h_d(n).map(f64::ln)).collect::<Result<_>>()?;
    Ok(if grid.len() >= 2 { linear_fit(&x, &y).0 } else { 0.0 })
}

pub fn run_error_scaling(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let model = config.walk_model()?.base();
    if !model.is_strongly_transient() {
        return Err(Error::Domain(format!(
            "error-term scaling needs d > 2 alpha, got d = {}, alpha = {}",
            model.d(),
            model.alpha()
        )));
    }
    let asym = Asymptotics::new(model.alpha(), model.d());
    let regime = asym.regime()?;
    let table = config.green_table(&model)?;
    let free = model.loop_free()?;
    let grid = &config.grid;
    let top = *grid.last().unwrap();
    let span = config.stats.tail_span;
    let tail_end = |n: u64| (n as f64 + span * n as f64).floor() as u64;
    let stats = par_indexed(config.paths, |i| {
        let s = path_for(&model, Purpose::Path, config.seed, i, top)?;
        let s2 = path_for(&model, Purpose::IndependentCopy, config.seed, i, top)?;
        let cross = cross_sums_by_horizon(&table, &s, &s2, grid)?;
        let lr = leveled_range(&s, grid)?;
        let own = leveled_sums(&table, &lr, &lr, grid.len());
        let st = path_for(&free, Purpose::LoopFreePath, config.seed, i, tail_end(top))?;
        let tail = grid
            .iter()
            .map(|&n| {
                let head = segment_sites(&st, 0, n as usize);
                let later = range_of(&st, n as usize, tail_end(n) as usize)?;
                Ok(green_sum(&table, head.sites(), later.sites()))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(PairStats { cross, own, tail })
    })?;

    let mut report = ExperimentReport::new("error-scaling", config, model.to_string(), model.loop_prob());
    let mut log_n = Vec::new();
    let mut log_g = Vec::new();
    let mut log_g2 = Vec::new();
    let mut samples = Vec::new();
    for (k, &n) in grid.iter().enumerate() {
        let g: Vec<f64> = stats.iter().map(|s| s.cross[k]).collect();
        let g2: Vec<f64> = g.iter().map(|v| v * v).collect();
        let own: Vec<f64> = stats.iter().map(|s| s.own[k] / n as f64).collect();
        let (mg, sg) = mean_se(&g);
        let (mg2, sg2) = mean_se(&g2);
        let (mo, so) = mean_se(&own);
        let row = report.row(n);
        row.insert("cross".into(), Estimate::mc(mg, sg));
        row.insert("cross_squared".into(), Estimate::mc(mg2, sg2));
        row.insert("self_over_n".into(), Estimate::mc(mo, so));
        row.insert("h_d".into(), Estimate::exact(asym.h_d(n)?, 0.0));
        for &c in &config.stats.tail_constants {
            let hits = stats.iter().filter(|s| s.tail[k] >= c * (n as f64).sqrt()).count();
            let f = hits as f64 / config.paths as f64;
            let se = (f * (1.0 - f) / config.paths as f64).sqrt();
            row.insert(format!("tail_freq_c{c}"), Estimate::mc(f, se));
        }
        log_n.push((n as f64).ln());
        log_g.push(mg.ln());
        log_g2.push(mg2.ln());
        for (i, s) in stats.iter().enumerate() {
            samples.push(SampleRow {
                series: "cross",
                path_id: i as u64,
                n,
                value: s.cross[k],
                range_size: None,
            });
        }
    }
    let target = predicted_slope(&asym, grid)?;
    report.set("predicted_slope", Estimate::exact(target, 0.0));
    if grid.len() >= 2 {
        let (slope, _, se) = linear_fit(&log_n, &log_g);
        let (slope2, _, se2) = linear_fit(&log_n, &log_g2);
        report.set("cross_slope", Estimate::mc(slope, se));
        report.set("cross_squared_slope", Estimate::mc(slope2, se2));
        let tol = config.thresholds.scaling_tolerance.unwrap_or(match regime {
            ErrorRegime::Constant => 0.1,
            _ => 0.12,
        });
        report.check(
            "cross_slope",
            (slope - target).abs() < tol,
            slope,
            format!("|slope - {target:.4}| < {tol}"),
        );
        let tol2 = config.thresholds.second_moment_tolerance;
        report.check(
            "second_moment_slope",
            (slope2 - 2.0 * slope).abs() < tol2,
            slope2 - 2.0 * slope,
            format!("|slope(E[G^2]) - 2 slope(E[G])| < {tol2}"),
        );
    }
    Ok(ExperimentOutput {
        report,
        samples,
        ..Default::default()
    })
}
