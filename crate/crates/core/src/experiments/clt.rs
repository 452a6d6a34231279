//! Normality of `(C_n - E[C_n]) / sqrt(n)`.

use serde::Serialize;

use super::report::{Estimate, ExperimentOutput, ExperimentReport};
use super::stats::{
    anderson_darling_bootstrap, excess_kurtosis, histogram, mean, normal_qq, skewness, variance,
};
use super::{capacity_samples, column, count_flagged, require_clt_regime, simulate_capacities, ExperimentConfig};
use crate::error::{Error, Result};
use crate::rng::Purpose;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CltStatistics {
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub anderson_darling: f64,
    pub p_value: f64,
}

/// Shape statistics of a sample and the bootstrap normality p-value.
pub fn clt_statistics(xs: &[f64], replicates: u32, seed: u64) -> CltStatistics {
    let (a2, p) = anderson_darling_bootstrap(xs, replicates, seed);
    CltStatistics {
        mean: mean(xs),
        sd: variance(xs).sqrt(),
        skewness: skewness(xs),
        excess_kurtosis: excess_kurtosis(xs),
        anderson_darling: a2,
        p_value: p,
    }
}

pub const MIN_CLT_PATHS: u64 = 500;

pub fn run_clt(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let model = config.walk_model()?.base();
    model.check_transient()?;
    require_clt_regime(&model, false, "clt")?;
    if config.paths < MIN_CLT_PATHS {
        return Err(Error::Config(format!(
            "normality checks need at least {MIN_CLT_PATHS} paths, got {}",
            config.paths
        )));
    }
    let table = config.green_table(&model)?;
    let th = &config.thresholds;
    let records = simulate_capacities(&model, Purpose::Path, config, &table)?;
    let mut report = ExperimentReport::new("clt", config, model.to_string(), model.loop_prob());
    let m = config.paths as f64;
    // Large-sample standard errors of the moment ratios under normality.
    let skew_se = (6.0 * (m - 2.0) / ((m + 1.0) * (m + 3.0))).sqrt();
    let kurt_se = (24.0 * m * (m - 2.0) * (m - 3.0) / ((m + 1.0).powi(2) * (m + 3.0) * (m + 5.0))).sqrt();
    for (k, &n) in config.grid.iter().enumerate() {
        let c = column(&records, k);
        let row = report.row(n);
        row.insert("skewness".into(), Estimate::mc(skewness(&c), skew_se));
        row.insert("excess_kurtosis".into(), Estimate::mc(excess_kurtosis(&c), kurt_se));
        let sd = variance(&c).sqrt() / (n as f64).sqrt();
        row.insert("sd_over_sqrt_n".into(), Estimate::mc(sd, sd / (2.0 * (m - 1.0)).sqrt()));
    }
    let last = column(&records, config.grid.len() - 1);
    let s = clt_statistics(&last, config.stats.bootstrap, config.seed);
    report.set("skewness", Estimate::mc(s.skewness, skew_se));
    report.set("excess_kurtosis", Estimate::mc(s.excess_kurtosis, kurt_se));
    report.set("anderson_darling", Estimate::exact(s.anderson_darling, 0.0));
    let b = config.stats.bootstrap as f64;
    report.set("p_value", Estimate::mc(s.p_value, (s.p_value * (1.0 - s.p_value) / b).sqrt()));
    report.check(
        "skewness",
        s.skewness.abs() < th.clt_skewness,
        s.skewness,
        format!("|skewness| < {}", th.clt_skewness),
    );
    report.check(
        "excess_kurtosis",
        s.excess_kurtosis.abs() < th.clt_kurtosis,
        s.excess_kurtosis,
        format!("|excess kurtosis| < {}", th.clt_kurtosis),
    );
    report.check(
        "anderson_darling",
        s.p_value > th.clt_p_value,
        s.p_value,
        format!("bootstrap p-value > {}", th.clt_p_value),
    );
    let flagged = count_flagged(&records);
    if flagged > 0 {
        report.flag(format!("{flagged} capacity solves stopped at the iteration cap"));
    }
    Ok(ExperimentOutput {
        report,
        samples: capacity_samples("base", &records),
        qq: normal_qq(&last),
        hist: histogram(&last, config.stats.histogram_bins.max(1)),
    })
}
