//! Linear growth of `E[C_n]` and the loop-free rate `mu_d / (1 - p)`.

use super::report::{Estimate, ExperimentOutput, ExperimentReport};
use super::stats::{mean, mean_se};
use super::{capacity_records, capacity_samples, column, count_flagged, par_indexed, path_for, CapacityRecord, ExperimentConfig};
use crate::error::{Error, Result};
use crate::numerics::linear_fit;
use crate::rng::Purpose;

/// Per-path least-squares slope of `C_n` against `n` over the grid.
fn path_slopes(records: &[Vec<CapacityRecord>]) -> Vec<f64> {
    records
        .iter()
        .map(|rs| {
            if rs.len() == 1 {
                rs[0].capacity / rs[0].n as f64
            } else {
                let x: Vec<f64> = rs.iter().map(|r| r.n as f64).collect();
                let y: Vec<f64> = rs.iter().map(|r| r.capacity).collect();
                linear_fit(&x, &y).0
            }
        })
        .collect()
}

pub fn run_lln(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let model = config.walk_model()?.base();
    model.check_transient()?;
    let p = model.base_loop_prob();
    if p >= 1.0 {
        return Err(Error::Domain("the walk never moves".into()));
    }
    let table = config.green_table(&model)?;
    let free = model.loop_free()?;
    let th = &config.thresholds;
    let top = *config.grid.last().unwrap();
    let base: Vec<(Vec<CapacityRecord>, u64)> = par_indexed(config.paths, |i| {
        let path = path_for(&model, Purpose::Path, config.seed, i, top)?;
        let loops = path.positions().windows(2).filter(|w| w[0] == w[1]).count() as u64;
        Ok((capacity_records(&path, &config.grid, &table)?, loops))
    })?;
    let loops: u64 = base.iter().map(|b| b.1).sum();
    let base: Vec<Vec<CapacityRecord>> = base.into_iter().map(|b| b.0).collect();
    let tilde = par_indexed(config.paths, |i| {
        let path = path_for(&free, Purpose::LoopFreePath, config.seed, i, top)?;
        capacity_records(&path, &config.grid, &table)
    })?;

    let mut report = ExperimentReport::new("lln", config, model.to_string(), p);
    let steps = (config.paths * top) as f64;
    let p_hat = loops as f64 / steps;
    report.set("loop_prob_empirical", Estimate::mc(p_hat, (p_hat * (1.0 - p_hat) / steps).sqrt()));
    report.set("loop_prob", Estimate::exact(p, 1e-12));

    let mut worst_pathwise = f64::INFINITY;
    for (k, &n) in config.grid.iter().enumerate() {
        let nf = n as f64;
        let c: Vec<f64> = column(&base, k).iter().map(|v| v / nf).collect();
        let ct: Vec<f64> = column(&tilde, k).iter().map(|v| v / nf).collect();
        let sizes: Vec<f64> = base.iter().map(|r| r[k].range_size as f64).collect();
        let j: Vec<f64> = base.iter().map(|r| 1.0 / r[k].occupation_bound).collect();
        let (mc, sc) = mean_se(&c);
        let (mt, st) = mean_se(&ct);
        let (ms, ss) = mean_se(&sizes);
        let (mj, sj) = mean_se(&j);
        for r in base.iter().map(|r| &r[k]) {
            let slack = r.capacity - r.occupation_bound;
            worst_pathwise = worst_pathwise.min(slack / r.capacity.max(1.0));
        }
        let row = report.row(n);
        row.insert("capacity_over_n".into(), Estimate::mc(mc, sc));
        row.insert("loop_free_capacity_over_n".into(), Estimate::mc(mt, st));
        row.insert("range_size".into(), Estimate::mc(ms, ss));
        row.insert("energy".into(), Estimate::mc(mj, sj));
        // 1 / E[J] <= E[C_n] by Jensen and the pathwise bound.
        row.insert("occupation_bound_over_n".into(), Estimate::mc(1.0 / (mj * nf), sj / (mj * mj * nf)));
    }

    let k = config.grid.len() - 1;
    let nf = top as f64;
    let last: Vec<f64> = column(&base, k).iter().map(|v| v / nf).collect();
    let (mu, mu_se) = mean_se(&last);
    report.set("mu", Estimate::mc(mu, mu_se));
    report.check(
        "mu_positive",
        mu > th.lln_sigma * mu_se,
        mu / mu_se.max(f64::MIN_POSITIVE),
        format!("mu / se > {}", th.lln_sigma),
    );
    if config.grid.len() >= 2 {
        let prev_n = config.grid[k - 1] as f64;
        let prev = mean(&column(&base, k - 1)) / prev_n;
        let drift = (mu - prev).abs() / prev;
        report.set("drift", Estimate::mc(drift, mu_se / prev));
        report.check("drift", drift < th.lln_drift, drift, format!("< {}", th.lln_drift));
    }

    let (s, s_se) = mean_se(&path_slopes(&base));
    let (st, st_se) = mean_se(&path_slopes(&tilde));
    let ratio = st / s;
    let ratio_se = ratio * ((st_se / st).powi(2) + (s_se / s).powi(2)).sqrt();
    let target = 1.0 / (1.0 - p);
    report.set("slope", Estimate::mc(s, s_se));
    report.set("loop_free_slope", Estimate::mc(st, st_se));
    report.set("slope_ratio", Estimate::mc(ratio, ratio_se));
    report.set("slope_ratio_target", Estimate::exact(target, 1e-12));
    let z = (ratio - target).abs() / ratio_se.max(f64::MIN_POSITIVE);
    report.check("slope_ratio", z <= th.ratio_sigma, z, format!("|ratio - 1/(1-p)| / se <= {}", th.ratio_sigma));
    report.check(
        "occupation_bound_pathwise",
        worst_pathwise >= -th.pathwise_tolerance,
        worst_pathwise,
        format!("(C_n - 1/J(nu_n)) / max(1, C_n) >= -{:e}", th.pathwise_tolerance),
    );
    let flagged = count_flagged(&base) + count_flagged(&tilde);
    if flagged > 0 {
        report.flag(format!("{flagged} capacity solves stopped at the iteration cap"));
    }
    let mut samples = capacity_samples("base", &base);
    samples.extend(capacity_samples("loop_free", &tilde));
    Ok(ExperimentOutput {
        report,
        samples,
        ..Default::default()
    })
}
