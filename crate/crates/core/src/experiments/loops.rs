//! The loop-insertion coupling: a loop-free walk with geometric runs of
//! one-step loops has the law of the original walk.

use std::collections::BTreeMap;

use super::report::{Estimate, ExperimentOutput, ExperimentReport};
use super::stats::chi_square_two_sample;
use super::{par_indexed, path_for, ExperimentConfig};
use crate::error::{Error, Result};
use crate::lattice::{Site, MAX_DIM};
use crate::range::SiteSet;
use crate::rng::{Purpose, RngStream, StreamId};
use crate::walk::{insert_loops, LatticePath, LoopInsertionRecord};

/// Checks `R~_n = R^_{n + N_{n-1}} = R^_{n + N_n}` for every `n` along a
/// coupled pair.
pub fn coupled_ranges_agree(tilde: &LatticePath, hat: &LatticePath, record: &LoopInsertionRecord) -> bool {
    let pt = tilde.positions();
    let ph = hat.positions();
    let mut rt = SiteSet::new();
    let mut rh = SiteSet::new();
    let mut t = 0usize;
    for (n, x) in pt.iter().enumerate() {
        rt.insert(*x);
        let start = n + record.n_before(n) as usize;
        let end = n + record.n(n) as usize;
        if end >= ph.len() {
            return false;
        }
        while t <= end {
            if !rt.contains(&ph[t]) {
                return false;
            }
            rh.insert(ph[t]);
            if t == start && rh.len() != rt.len() {
                return false;
            }
            t += 1;
        }
        if ph[start] != *x || ph[end] != *x || rh.len() != rt.len() {
            return false;
        }
    }
    true
}

/// Bin of a site for the marginal comparisons: single sites near the
/// origin, sup-norm shells further out.
fn site_bin(x: &Site) -> (u64, [i64; MAX_DIM]) {
    let r = x.sup_norm();
    if r <= 2 {
        (r, *x.raw())
    } else {
        (r.min(13), [0; MAX_DIM])
    }
}

fn counts_to_vectors<K: Ord>(m: &BTreeMap<K, (u64, u64)>) -> (Vec<u64>, Vec<u64>) {
    m.values().map(|v| v.0).zip(m.values().map(|v| v.1)).unzip()
}

struct Sample {
    base: Vec<Site>,
    coupled: Vec<Site>,
    base_range: u64,
    coupled_range: u64,
    identity: bool,
}

pub fn run_loop_equivalence(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let model = config.walk_model()?.base();
    let p = model.base_loop_prob();
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("loop probability must be in [0, 1), got {p}")));
    }
    let free = model.loop_free()?;
    let times = &config.stats.marginal_times;
    let range_h = config.stats.range_size_horizon;
    let horizon = times.iter().copied().max().unwrap_or(0).max(range_h);
    let draws = par_indexed(config.paths, |i| {
        let s = path_for(&model, Purpose::Path, config.seed, i, horizon)?;
        let tilde = path_for(&free, Purpose::LoopFreePath, config.seed, i, horizon)?;
        let mut rng = RngStream::new(config.seed, StreamId::new(Purpose::CoupledPath, i));
        let (hat, record) = insert_loops(&tilde, p, &mut rng)?;
        let identity = coupled_ranges_agree(&tilde, &hat, &record);
        let range = |path: &LatticePath| {
            path.positions()[..=range_h as usize]
                .iter()
                .copied()
                .collect::<SiteSet>()
                .len() as u64
        };
        Ok(Sample {
            base: times.iter().map(|&t| s.at(t as usize)).collect(),
            coupled: times.iter().map(|&t| hat.at(t as usize)).collect(),
            base_range: range(&s),
            coupled_range: range(&hat),
            identity,
        })
    })?;

    let mut report = ExperimentReport::new("loop-equivalence", config, model.to_string(), p);
    let broken = draws.iter().filter(|s| !s.identity).count();
    report.check(
        "coupled_range_identity",
        broken == 0,
        broken as f64,
        "R~_n = R^_{n+N_n} on every path".into(),
    );
    let mut passes = 0usize;
    for (k, &t) in times.iter().enumerate() {
        let mut bins: BTreeMap<(u64, [i64; MAX_DIM]), (u64, u64)> = BTreeMap::new();
        for s in &draws {
            bins.entry(site_bin(&s.base[k])).or_default().0 += 1;
            bins.entry(site_bin(&s.coupled[k])).or_default().1 += 1;
        }
        let (a, b) = counts_to_vectors(&bins);
        let r = chi_square_two_sample(&a, &b);
        passes += usize::from(r.p_value > config.thresholds.chi_square_p);
        let row = report.row(t);
        row.insert("chi_square".into(), Estimate::exact(r.statistic, 0.0));
        row.insert("degrees_of_freedom".into(), Estimate::exact(r.df as f64, 0.0));
        row.insert("p_value".into(), Estimate::exact(r.p_value, 0.0));
    }
    let need = config.thresholds.chi_square_min_pass.min(times.len());
    report.check(
        "marginals",
        passes >= need,
        passes as f64,
        format!("p > {} in at least {need} of {} marginal tests", config.thresholds.chi_square_p, times.len()),
    );
    let mut sizes: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for s in &draws {
        sizes.entry(s.base_range).or_default().0 += 1;
        sizes.entry(s.coupled_range).or_default().1 += 1;
    }
    let (a, b) = counts_to_vectors(&sizes);
    let r = chi_square_two_sample(&a, &b);
    report.set("range_size_chi_square", Estimate::exact(r.statistic, 0.0));
    report.set("range_size_p_value", Estimate::exact(r.p_value, 0.0));
    if r.p_value <= config.thresholds.chi_square_p {
        report.flag(format!("range sizes at n = {range_h} differ (p = {:.3e})", r.p_value));
    }
    Ok(ExperimentOutput {
        report,
        ..Default::default()
    })
}
