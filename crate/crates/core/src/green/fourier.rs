//! Green function by a punctured Riemann sum over the Fourier grid.
//!
//! With `theta_m = 2 pi m / N` the sum `Q(x) = N^-d sum_{m != 0} cos(theta_m . x) / (1 - phi(theta_m))`
//! misses the integrable singularity `c |theta|^-alpha` at the origin. Its
//! contribution, and the aliased images of that singularity at `x + N j`,
//! are both captured by the generalised Euler-Maclaurin correction
//! `G(x) = Q(x) - C N^{alpha-d} E(x / N)`, where `C` is the Riesz constant of
//! the singular part and `E(u) = sum'_{j != 0} |u + j|^{alpha-d}` is the
//! zeta-regularised periodic sum (see [`crate::numerics::periodic_power_sum`]).
//! The remaining error is of order `N^{-2}` relative to the correction.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::table::{riesz_constant, GreenMethod, GreenTable, SymmetricWindow, TableMeta};
use crate::error::{Error, Result};
use crate::limits::check_allocation;
use crate::numerics::periodic_power_sum;
use crate::walk::WalkModel;

/// Default grid size for dimension `d`.
pub fn default_grid(d: usize) -> usize {
    match d {
        1 => 4096,
        2 => 512,
        3 => 128,
        4 => 64,
        5 => 24,
        _ => 16,
    }
}

/// Smallest admissible grid for a window of radius `radius`.
pub fn grid_for_radius(d: usize, radius: usize) -> usize {
    let n = default_grid(d).max(4 * radius);
    n + n % 2
}

/// Uncorrected grid sum `Q(x)` on the orthant `[0, R]^d`, row-major with
/// the first coordinate slowest.
fn grid_sum(model: &WalkModel, radius: usize, n: usize) -> Result<Vec<f64>> {
    let d = model.d();
    let half = n / 2 + 1;
    let cells = (half as u128).pow(d as u32);
    check_allocation("Fourier grid", cells * 8 * 2)?;
    let cells = cells as usize;
    let h = 2.0 * PI / n as f64;

    // Symbol values on the folded grid m_j in 0..=N/2.
    let mut data = vec![0.0; cells];
    data.par_chunks_mut(half).enumerate().for_each(|(row, chunk)| {
        let mut theta = vec![0.0; d];
        let mut rem = row;
        for j in (0..d - 1).rev() {
            theta[j] = (rem % half) as f64 * h;
            rem /= half;
        }
        for (m, v) in chunk.iter_mut().enumerate() {
            theta[d - 1] = m as f64 * h;
            let eps = model.one_minus_charfn(&theta);
            *v = if eps > 0.0 { 1.0 / eps } else { 0.0 };
        }
    });
    data[0] = 0.0;

    // Folding weights times cosines, exact angle reduction.
    let xs = radius + 1;
    let cos_n: Vec<f64> = (0..n).map(|r| (h * r as f64).cos()).collect();
    let mut coef = vec![0.0; xs * half];
    for x in 0..xs {
        for m in 0..half {
            let w = if m == 0 || 2 * m == n { 1.0 } else { 2.0 };
            coef[x * half + m] = w * cos_n[(m * x) % n];
        }
    }

    // Contract one axis at a time; the new x axis takes the place of the
    // contracted m axis.
    let mut cur = data;
    let mut outer = 1usize;
    for t in 0..d {
        let inner = half.pow((d - t - 1) as u32);
        let mut next = vec![0.0; outer * xs * inner];
        next.par_chunks_mut(inner).enumerate().for_each(|(blk, out)| {
            let p = blk / xs;
            let x = blk % xs;
            let base = p * half * inner;
            for m in 0..half {
                let c = coef[x * half + m];
                let src = &cur[base + m * inner..base + (m + 1) * inner];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += c * s;
                }
            }
        });
        cur = next;
        outer *= xs;
    }
    let norm = (n as f64).powi(-(d as i32));
    cur.iter_mut().for_each(|v| *v *= norm);
    Ok(cur)
}

/// Corrected Green values for every key of `window`.
pub fn fourier_values(model: &WalkModel, window: &SymmetricWindow, n: usize) -> Result<Vec<f64>> {
    let d = model.d();
    let radius = window.radius();
    if n % 2 != 0 || n < 4 * radius || n < 4 {
        return Err(Error::Config(format!(
            "Fourier grid size must be even and at least max(4, 4R) = {}, got {n}",
            (4 * radius).max(4)
        )));
    }
    let q = grid_sum(model, radius, n)?;
    let alpha = model.alpha();
    let c = riesz_constant(model);
    let scale = c * (n as f64).powf(alpha - d as f64);
    let p = d as f64 - alpha;
    let xs = radius + 1;
    let keys: Vec<&[u32]> = window.keys().collect();
    Ok(keys
        .par_iter()
        .map(|k| {
            // q is stored with the first coordinate slowest.
            let mut idx = 0usize;
            for &v in k.iter() {
                idx = idx * xs + v as usize;
            }
            let u: Vec<f64> = k.iter().map(|&v| v as f64 / n as f64).collect();
            q[idx] - scale * periodic_power_sum(d, p, &u)
        })
        .collect())
}

/// Build a table of radius `radius` on an `N^d` grid. The error estimate is
/// the change of `G(0)` against the grid of half the size.
pub fn build_fourier(model: &WalkModel, radius: usize, n: usize) -> Result<GreenTable> {
    model.check_transient()?;
    let window = SymmetricWindow::new(model.d(), radius)?;
    let values = fourier_values(model, &window, n)?;
    let coarse_n = (n / 2) & !1;
    let error = if coarse_n >= 4 {
        let w0 = SymmetricWindow::new(model.d(), 0)?;
        (fourier_values(model, &w0, coarse_n)?[0] - values[0]).abs()
    } else {
        f64::NAN
    };
    let meta = TableMeta {
        method: GreenMethod::FourierGrid { n },
        error,
        loop_prob: model.loop_prob(),
    };
    GreenTable::from_reduced(model, window, values, None, meta)
}
