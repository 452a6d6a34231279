//! Experiment configuration files (JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::green::{build_green_table, fourier, load_table, GreenMethod, GreenTable};
use crate::walk::{ModelSpec, WalkModel};

/// Where the Green table comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum TableSource {
    /// Build in memory. Without a backend the Fourier grid for the radius
    /// is used.
    Build {
        radius: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        backend: Option<GreenMethod>,
    },
    File { path: PathBuf },
}

/// Window radius that keeps the default Fourier grid small in dimension `d`.
pub fn default_radius(d: usize) -> usize {
    match d {
        1..=3 => 32,
        4 => 12,
        5 => 8,
        _ => 4,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatOptions {
    /// Parametric bootstrap replicates for the normality test.
    pub bootstrap: u32,
    pub histogram_bins: usize,
    /// Constants `c` of the tail events `G >= c sqrt(n)`.
    pub tail_constants: Vec<f64>,
    /// The constant `c'` of the window `[n, n + c' n]`.
    pub tail_span: f64,
    /// Times at which the position marginals of the two loop constructions
    /// are compared.
    pub marginal_times: Vec<u64>,
    /// Horizon at which range sizes of the two constructions are compared.
    pub range_size_horizon: u64,
    /// Trials per site for Monte Carlo capacities.
    pub escape_trials: u64,
    /// Time window and number of log-spaced points for the `p_n(0)` fit.
    pub return_window: [u64; 2],
    pub return_points: usize,
    /// Horizon of the partial sums `sum n p_n(0)`.
    pub moment_horizon: u64,
}

impl Default for StatOptions {
    fn default() -> Self {
        StatOptions {
            bootstrap: 5000,
            histogram_bins: 40,
            tail_constants: vec![0.5, 1.0, 2.0],
            tail_span: 1.0,
            marginal_times: vec![1, 2, 8],
            range_size_horizon: 64,
            escape_trials: 100_000,
            return_window: [50, 500],
            return_points: 12,
            moment_horizon: 10_000,
        }
    }
}

/// Pass/fail thresholds. They are properties calibrated on pilot runs, not
/// constants from the theory, and are copied into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// `mu_d` must exceed this many standard errors.
    pub lln_sigma: f64,
    /// Relative change of `E[C_n] / n` between the last two horizons.
    pub lln_drift: f64,
    /// Loop-free to base slope ratio against `1 / (1 - p)`, in standard errors.
    pub ratio_sigma: f64,
    pub variance_plateau: f64,
    pub variance_sigma: f64,
    pub clt_skewness: f64,
    pub clt_kurtosis: f64,
    pub clt_p_value: f64,
    /// Half-width of the accepted band around the predicted error slope;
    /// by default 0.1 when the prediction is 0 and 0.12 otherwise.
    pub scaling_tolerance: Option<f64>,
    pub second_moment_tolerance: f64,
    /// `max <= factor * median` for `E[C_n^4] / n^2` over the grid.
    pub moment4_factor: f64,
    pub chi_square_p: f64,
    pub chi_square_min_pass: usize,
    pub return_slope_rel: f64,
    pub saturation: f64,
    pub median_slope_rel: f64,
    /// Pathwise inequalities are allowed this much numerical slack.
    pub pathwise_tolerance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            lln_sigma: 5.0,
            lln_drift: 0.05,
            ratio_sigma: 3.0,
            variance_plateau: 0.15,
            variance_sigma: 3.0,
            clt_skewness: 0.25,
            clt_kurtosis: 0.5,
            clt_p_value: 0.01,
            scaling_tolerance: None,
            second_moment_tolerance: 0.2,
            moment4_factor: 2.0,
            chi_square_p: 0.001,
            chi_square_min_pass: 2,
            return_slope_rel: 0.1,
            saturation: 0.05,
            median_slope_rel: 0.1,
            pathwise_tolerance: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// Horizons `n`, strictly increasing.
    pub grid: Vec<u64>,
    /// Number of independent paths `M` per horizon.
    pub paths: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableSource>,
    #[serde(default)]
    pub stats: StatOptions,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Worker threads; the results do not depend on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Allow LLN and variance runs when `2 alpha <= d <= 5 alpha / 2`.
    #[serde(default)]
    pub allow_weak_regime: bool,
    /// Output directory used when the command line does not give one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, grid: Vec<u64>, paths: u64, seed: u64) -> Self {
        ExperimentConfig {
            model,
            grid,
            paths,
            seed,
            table: None,
            stats: StatOptions::default(),
            thresholds: Thresholds::default(),
            workers: None,
            allow_weak_regime: false,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("experiment config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form, excluding the worker count and
    /// the output directory, which do not affect results.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = None;
        c.output = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("the horizon grid is empty".into()));
        }
        if self.grid[0] < 1 {
            return Err(Error::Config("horizons must be at least 1".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("the horizon grid must be strictly increasing".into()));
        }
        if self.paths == 0 {
            return Err(Error::Config("at least one path is needed".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        Ok(())
    }

    pub fn walk_model(&self) -> Result<WalkModel> {
        WalkModel::new(self.model)
    }

    /// Load or build the Green table of the base model.
    pub fn green_table(&self, model: &WalkModel) -> Result<GreenTable> {
        let base = model.base();
        let source = self.table.clone().unwrap_or(TableSource::Build {
            radius: default_radius(model.d()),
            backend: None,
        });
        let table = match source {
            TableSource::File { path } => load_table(&path)?,
            TableSource::Build { radius, backend } => {
                let method = backend.unwrap_or(GreenMethod::FourierGrid {
                    n: fourier::grid_for_radius(model.d(), radius),
                });
                build_green_table(&base, radius, method, self.seed)?
            }
        };
        table.check_model(&base)?;
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_and_hash() {
        let text = r#"{"model":{"kind":"subordinate","d":3,"alpha":0.8},
            "grid":[256,512],"paths":10,"seed":7,
            "table":{"source":"build","radius":8}}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.stats, StatOptions::default());
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        let mut w = c.clone();
        w.workers = Some(3);
        assert_eq!(w.hash(), c.hash());
        w.seed = 8;
        assert_ne!(w.hash(), c.hash());
    }

    #[test]
    fn invalid_configs() {
        let base = r#"{"model":{"kind":"simple","d":3},"paths":10,"seed":1,"grid":"#;
        for grid in ["[]", "[0, 4]", "[8, 4]"] {
            assert!(ExperimentConfig::from_json(&format!("{base}{grid}}}")).is_err(), "{grid}");
        }
        assert!(ExperimentConfig::from_json(&format!("{base}[4], \"bogus\": 1}}")).is_err());
    }
}
