//! Green function as the mean number of visits, by simulation.
//!
//! Each path contributes its visit counts up to the horizon, averaged over
//! the symmetry orbit of each window key. The truncation bias is
//! `sum_{n > T} p_n(x) <= G(0) - G_T(0)`, which is reported with the table.

use rayon::prelude::*;

use super::spectral::{green_quadrature_at, truncated_green_at};
use super::table::{GreenMethod, GreenTable, SymmetricWindow, TableMeta};
use crate::error::Result;
use crate::lattice::Site;
use crate::rng::{Purpose, RngStream, StreamId};
use crate::walk::WalkModel;

const CHUNK: u64 = 2048;

fn path_counts(
    model: &WalkModel,
    window: &SymmetricWindow,
    horizon: u64,
    rng: &mut RngStream,
    scratch: &mut Vec<u32>,
) -> Result<()> {
    scratch.clear();
    let mut cur = Site::ORIGIN;
    scratch.push(0);
    for _ in 0..horizon {
        cur = cur.checked_add(&model.sample_increment(rng)?)?;
        if let Some(i) = window.index_of(&cur) {
            scratch.push(i as u32);
        }
    }
    scratch.sort_unstable();
    Ok(())
}

/// Per-key mean visit counts and their standard errors.
pub fn occupation_values(
    model: &WalkModel,
    window: &SymmetricWindow,
    paths: u64,
    horizon: u64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let nk = window.len();
    let inv_mult: Vec<f64> = (0..nk).map(|i| 1.0 / window.multiplicity(i) as f64).collect();
    let chunks: Vec<u64> = (0..paths.div_ceil(CHUNK)).collect();
    let mut sum = vec![0.0; nk];
    let mut sumsq = vec![0.0; nk];
    for batch in chunks.chunks(16) {
        let parts: Vec<Result<(Vec<f64>, Vec<f64>)>> = batch
            .par_iter()
            .map(|&c| {
                let mut s = vec![0.0; nk];
                let mut s2 = vec![0.0; nk];
                let mut scratch = Vec::new();
                for i in c * CHUNK..((c + 1) * CHUNK).min(paths) {
                    let mut rng = RngStream::new(seed, StreamId::new(Purpose::Occupation, i));
                    path_counts(model, window, horizon, &mut rng, &mut scratch)?;
                    let mut j = 0;
                    while j < scratch.len() {
                        let key = scratch[j] as usize;
                        let mut run = 0;
                        while j < scratch.len() && scratch[j] as usize == key {
                            run += 1;
                            j += 1;
                        }
                        let v = run as f64 * inv_mult[key];
                        s[key] += v;
                        s2[key] += v * v;
                    }
                }
                Ok((s, s2))
            })
            .collect();
        for part in parts {
            let (s, s2) = part?;
            for k in 0..nk {
                sum[k] += s[k];
                sumsq[k] += s2[k];
            }
        }
    }
    let m = paths as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let se = (0..nk)
        .map(|k| {
            let var = (sumsq[k] / m - mean[k] * mean[k]).max(0.0) * m / (m - 1.0).max(1.0);
            (var / m).sqrt()
        })
        .collect();
    Ok((mean, se))
}

pub fn build_occupation(
    model: &WalkModel,
    radius: usize,
    paths: u64,
    horizon: u64,
    seed: u64,
) -> Result<GreenTable> {
    model.check_transient()?;
    let window = SymmetricWindow::new(model.d(), radius)?;
    let (values, se) = occupation_values(model, &window, paths, horizon, seed)?;
    let bias = (green_quadrature_at(model, &Site::ORIGIN)?
        - truncated_green_at(model, horizon, &Site::ORIGIN))
    .max(0.0);
    let max_se = se.iter().copied().fold(0.0, f64::max);
    let meta = TableMeta {
        method: GreenMethod::OccupationMc { paths, horizon },
        error: 3.0 * max_se + bias,
        loop_prob: model.loop_prob(),
    };
    GreenTable::from_reduced(model, window, values, Some(se), meta)
}
