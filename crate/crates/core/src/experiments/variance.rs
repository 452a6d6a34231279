//! `Var(C_n) / n` and the fourth central moment `E[(C_n - E C_n)^4] / n^2`.

use super::report::{Estimate, ExperimentOutput, ExperimentReport};
use super::stats::{central_moment, jackknife_se, mean_se, variance};
use super::{capacity_samples, column, count_flagged, require_clt_regime, simulate_capacities, ExperimentConfig};
use crate::error::{Error, Result};
use crate::rng::Purpose;

/// `Var(x) / n` with its jackknife standard error.
pub fn variance_over_n(xs: &[f64], n: u64) -> (f64, f64) {
    let nf = n as f64;
    (variance(xs) / nf, jackknife_se(xs, variance) / nf)
}

/// `m4 / n^2` with its jackknife standard error.
pub fn fourth_moment_ratio(xs: &[f64], n: u64) -> (f64, f64) {
    let n2 = (n as f64).powi(2);
    let m4 = |v: &[f64]| central_moment(v, 4);
    (m4(xs) / n2, jackknife_se(xs, m4) / n2)
}

pub fn run_variance(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let model = config.walk_model()?.base();
    model.check_transient()?;
    require_clt_regime(&model, config.allow_weak_regime, "variance")?;
    if config.paths < 2 {
        return Err(Error::Config("variance estimates need at least 2 paths".into()));
    }
    let table = config.green_table(&model)?;
    let th = &config.thresholds;
    let records = simulate_capacities(&model, Purpose::Path, config, &table)?;
    let mut report = ExperimentReport::new("variance", config, model.to_string(), model.loop_prob());
    let mut ratios = Vec::new();
    for (k, &n) in config.grid.iter().enumerate() {
        let c = column(&records, k);
        let (v, se) = variance_over_n(&c, n);
        let (m, mse) = mean_se(&c);
        let row = report.row(n);
        row.insert("variance_over_n".into(), Estimate::mc(v, se));
        row.insert("capacity".into(), Estimate::mc(m, mse));
        ratios.push((v, se));
    }
    let (sigma2, sigma2_se) = *ratios.last().unwrap();
    report.set("sigma2", Estimate::mc(sigma2, sigma2_se));
    if sigma2 == 0.0 {
        report.flag("degenerate sample: all capacities are equal".into());
    }
    report.check(
        "sigma2_positive",
        sigma2 > th.variance_sigma * sigma2_se && sigma2 > 0.0,
        sigma2 / sigma2_se.max(f64::MIN_POSITIVE),
        format!("sigma2 / se > {}", th.variance_sigma),
    );
    if ratios.len() >= 2 {
        let prev = ratios[ratios.len() - 2].0;
        let change = (sigma2 / prev - 1.0).abs();
        report.set("plateau_change", Estimate::exact(change, 0.0));
        report.check(
            "plateau",
            change < th.variance_plateau,
            change,
            format!("relative change of Var/n between the last two horizons < {}", th.variance_plateau),
        );
    }
    let flagged = count_flagged(&records);
    if flagged > 0 {
        report.flag(format!("{flagged} capacity solves stopped at the iteration cap"));
    }
    Ok(ExperimentOutput {
        report,
        samples: capacity_samples("base", &records),
        ..Default::default()
    })
}

pub fn run_moment4(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let model = config.walk_model()?.base();
    model.check_transient()?;
    if config.paths < 4 {
        return Err(Error::Config("fourth moments need at least 4 paths".into()));
    }
    let table = config.green_table(&model)?;
    let records = simulate_capacities(&model, Purpose::Path, config, &table)?;
    let mut report = ExperimentReport::new("moment4", config, model.to_string(), model.loop_prob());
    let mut values = Vec::new();
    for (k, &n) in config.grid.iter().enumerate() {
        let (r, se) = fourth_moment_ratio(&column(&records, k), n);
        report.row(n).insert("fourth_moment_over_n2".into(), Estimate::mc(r, se));
        values.push(r);
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let factor = config.thresholds.moment4_factor;
    report.set("max_over_median", Estimate::exact(if median > 0.0 { max / median } else { 0.0 }, 0.0));
    report.check(
        "bounded",
        max <= factor * median,
        if median > 0.0 { max / median } else { 0.0 },
        format!("max over the grid <= {factor} x median"),
    );
    Ok(ExperimentOutput {
        report,
        samples: capacity_samples("base", &records),
        ..Default::default()
    })
}
