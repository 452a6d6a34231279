//! Transience diagnostics: decay of `p_n(0)`, convergence of
//! `sum n p_n(0)` and the growth of typical displacements.

use rayon::prelude::*;

use super::report::{Estimate, ExperimentOutput, ExperimentReport};
use super::{par_indexed, path_for, ExperimentConfig};
use crate::error::Result;
use crate::green::{pn_at_origin, return_moment_partial_sum};
use crate::numerics::linear_fit;
use crate::rng::Purpose;

/// Log-spaced integer times in `[lo, hi]`, even ones for bipartite walks.
fn return_times(lo: u64, hi: u64, points: usize, even: bool) -> Vec<u64> {
    let (a, b) = ((lo.max(1) as f64).ln(), (hi.max(lo + 1) as f64).ln());
    let mut out: Vec<u64> = (0..points.max(2))
        .map(|i| {
            let t = (a + (b - a) * i as f64 / (points.max(2) - 1) as f64).exp().round() as u64;
            if even {
                t + t % 2
            } else {
                t
            }
        })
        .collect();
    out.dedup();
    out
}

pub fn run_transience_diag(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let model = config.walk_model()?.base();
    let th = &config.thresholds;
    let st = &config.stats;
    let mut report = ExperimentReport::new("transience", config, model.to_string(), model.loop_prob());
    let ratio = model.d() as f64 / model.alpha();

    let times = return_times(st.return_window[0], st.return_window[1], st.return_points, model.is_bipartite());
    let pn: Vec<f64> = times.par_iter().map(|&n| pn_at_origin(&model, n)).collect();
    for (&n, &v) in times.iter().zip(&pn) {
        report.row(n).insert("return_probability".into(), Estimate::exact(v, 1e-12));
    }
    let x: Vec<f64> = times.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = pn.iter().map(|v| v.ln()).collect();
    let (slope, _, se) = linear_fit(&x, &y);
    report.set("return_slope", Estimate::mc(slope, se));
    report.set("return_slope_target", Estimate::exact(-ratio, 0.0));
    report.check(
        "return_slope",
        (slope + ratio).abs() <= th.return_slope_rel * ratio,
        slope,
        format!("|slope + d/alpha| <= {} d/alpha", th.return_slope_rel),
    );

    let big = st.moment_horizon.max(10);
    let s_full = return_moment_partial_sum(&model, big);
    let s_tenth = return_moment_partial_sum(&model, big / 10);
    let increment = (s_full - s_tenth) / s_full;
    report.set("moment_partial_sum", Estimate::exact(s_full, 1e-8 * s_full));
    report.set("moment_last_decade_increment", Estimate::exact(increment, 1e-8));
    if model.is_strongly_transient() {
        report.check(
            "moment_saturation",
            increment < th.saturation,
            increment,
            format!("relative increment over the last decade < {}", th.saturation),
        );
    } else {
        report.flag(format!(
            "not strongly transient (d = {}, alpha = {}): sum n p_n(0) diverges{}",
            model.d(),
            model.alpha(),
            if model.is_transient() { "" } else { "; the walk is recurrent" }
        ));
    }

    let grid = &config.grid;
    let top = *grid.last().unwrap();
    let norms = par_indexed(config.paths, |i| {
        let path = path_for(&model, Purpose::Path, config.seed, i, top)?;
        Ok(grid.iter().map(|&n| path.at(n as usize).euclidean_norm()).collect::<Vec<f64>>())
    })?;
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (k, &n) in grid.iter().enumerate() {
        let mut v: Vec<f64> = norms.iter().map(|r| r[k]).collect();
        v.sort_by(f64::total_cmp);
        let med = v[v.len() / 2];
        report.row(n).insert("median_norm".into(), Estimate::mc(med, 0.0));
        if med > 0.0 {
            lx.push((n as f64).ln());
            ly.push(med.ln());
        }
    }
    if lx.len() >= 2 {
        let (slope, _, se) = linear_fit(&lx, &ly);
        let target = 1.0 / model.alpha();
        report.set("median_norm_slope", Estimate::mc(slope, se));
        report.check(
            "median_norm_slope",
            (slope - target).abs() <= th.median_slope_rel * target,
            slope,
            format!("|slope - 1/alpha| <= {} / alpha", th.median_slope_rel),
        );
    }
    Ok(ExperimentOutput {
        report,
        ..Default::default()
    })
}
