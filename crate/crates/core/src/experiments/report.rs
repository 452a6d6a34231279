//! Experiment reports and their CSV companions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::config::ExperimentConfig;

/// A reported number with either a Monte Carlo standard error or a
/// deterministic tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Estimate {
    pub fn mc(value: f64, std_err: f64) -> Self {
        Estimate {
            value,
            std_err: Some(std_err),
            tolerance: None,
        }
    }

    pub fn exact(value: f64, tolerance: f64) -> Self {
        Estimate {
            value,
            std_err: None,
            tolerance: Some(tolerance),
        }
    }

    /// Spread used when comparing with another estimate.
    pub fn sigma(&self) -> f64 {
        self.std_err.or(self.tolerance).unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonRow {
    pub n: u64,
    #[serde(flatten)]
    pub values: BTreeMap<String, Estimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    /// Human-readable acceptance condition.
    pub condition: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub model: String,
    pub loop_prob: f64,
    pub paths: u64,
    pub horizons: Vec<HorizonRow>,
    pub summary: BTreeMap<String, Estimate>,
    pub checks: Vec<Check>,
    /// Non-fatal conditions worth a look (truncated escapes, capped solvers).
    pub flags: Vec<String>,
    pub passed: bool,
    pub config: ExperimentConfig,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: &ExperimentConfig, model: String, loop_prob: f64) -> Self {
        // Worker count and output directory do not affect results; keep
        // them out so reports compare byte for byte.
        let mut config = config.clone();
        config.workers = None;
        config.output = None;
        ExperimentReport {
            experiment: experiment.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            seed: config.seed,
            model,
            loop_prob,
            paths: config.paths,
            horizons: Vec::new(),
            summary: BTreeMap::new(),
            checks: Vec::new(),
            flags: Vec::new(),
            passed: true,
            config,
        }
    }

    pub fn row(&mut self, n: u64) -> &mut BTreeMap<String, Estimate> {
        if let Some(i) = self.horizons.iter().position(|r| r.n == n) {
            return &mut self.horizons[i].values;
        }
        self.horizons.push(HorizonRow {
            n,
            values: BTreeMap::new(),
        });
        &mut self.horizons.last_mut().unwrap().values
    }

    pub fn set(&mut self, key: &str, e: Estimate) {
        self.summary.insert(key.to_string(), e);
    }

    pub fn check(&mut self, name: &str, passed: bool, observed: f64, condition: String) {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            observed,
            condition,
        });
    }

    pub fn flag(&mut self, msg: String) {
        if !self.flags.contains(&msg) {
            self.flags.push(msg);
        }
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// One per-path record of `samples.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRow {
    pub series: &'static str,
    pub path_id: u64,
    pub n: u64,
    /// `C_n` for capacity series, the sampled statistic otherwise.
    pub value: f64,
    pub range_size: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub samples: Vec<SampleRow>,
    /// `(theoretical quantile, standardized sample quantile)`.
    pub qq: Vec<(f64, f64)>,
    /// `(lower edge, upper edge, count)`.
    pub hist: Vec<(f64, f64, u64)>,
}

impl Default for ExperimentReport {
    fn default() -> Self {
        let config = ExperimentConfig::new(crate::walk::ModelSpec::simple(3), vec![1], 1, 0);
        ExperimentReport::new("", &config, String::new(), 0.0)
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn samples_csv(rows: &[SampleRow]) -> String {
    let mut s = String::from("series,path_id,n,value,R_n\n");
    for r in rows {
        let size = r.range_size.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", r.series, r.path_id, r.n, num(r.value), size);
    }
    s
}

pub fn qq_csv(rows: &[(f64, f64)]) -> String {
    let mut s = String::from("theoretical,sample\n");
    for (a, b) in rows {
        let _ = writeln!(s, "{},{}", num(*a), num(*b));
    }
    s
}

pub fn hist_csv(rows: &[(f64, f64, u64)]) -> String {
    let mut s = String::from("lower,upper,count\n");
    for (a, b, c) in rows {
        let _ = writeln!(s, "{},{},{c}", num(*a), num(*b));
    }
    s
}
