//! Lattice Green functions `G(x) = sum_n p_n(x)` of transient walks.
//!
//! Three independent backends build a [`GreenTable`] on a window
//! `|x|_inf <= R`: a corrected Fourier grid sum ([`fourier`]), a renewal
//! series over the simple walk ([`renewal`]) and visit counting by
//! simulation ([`occupation`]). Beyond the window the table switches to the
//! power law `c |x|^{alpha-d}` fitted on its outer shell.

pub mod asymptotics;
pub mod fourier;
pub mod occupation;
pub mod persist;
pub mod renewal;
pub mod spectral;
pub mod table;

pub use asymptotics::{Asymptotics, ErrorRegime};
pub use persist::{load_table, read_table, save_table, write_table};
pub use spectral::{
    green_quadrature_at, pn_at, pn_at_origin, return_moment_partial_sum, truncated_green_at,
    TruncatedGreenTable,
};
pub use table::{riesz_constant, FarField, GreenMethod, GreenTable, SymmetricWindow, TableMeta};

use crate::error::Result;
use crate::lattice::Site;
use crate::walk::WalkModel;

/// Characteristic function `E[exp(i theta . X_1)]` of the step law.
pub fn charfn(model: &WalkModel, theta: &[f64]) -> f64 {
    model.charfn(theta)
}

/// Build a table with the requested backend. `seed` only matters for the
/// Monte Carlo backend.
pub fn build_green_table(
    model: &WalkModel,
    radius: usize,
    method: GreenMethod,
    seed: u64,
) -> Result<GreenTable> {
    match method {
        GreenMethod::FourierGrid { n } => fourier::build_fourier(model, radius, n),
        GreenMethod::RenewalSeries { terms } => {
            renewal::build_renewal(model, radius, terms as usize)
        }
        GreenMethod::OccupationMc { paths, horizon } => {
            occupation::build_occupation(model, radius, paths, horizon, seed)
        }
    }
}

/// Fourier table with the default grid for the dimension.
pub fn default_table(model: &WalkModel, radius: usize) -> Result<GreenTable> {
    let n = fourier::grid_for_radius(model.d(), radius);
    fourier::build_fourier(model, radius, n)
}

/// `G(x)` from a table (the spec's `green_at`).
pub fn green_at(table: &GreenTable, x: &Site) -> f64 {
    table.at(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_walk_green_at_origin() {
        // Watson's integral: G(0) = 1.516386059...
        let m = WalkModel::simple(3).unwrap();
        let f = fourier::build_fourier(&m, 4, 128).unwrap();
        assert!((f.origin() - 1.516_386_06).abs() < 1e-4, "fourier {}", f.origin());
        let r = renewal::build_renewal(&m, 0, 8192).unwrap();
        assert!((r.origin() - 1.516_386_06).abs() < 1e-5, "renewal {}", r.origin());
        let q = green_quadrature_at(&m, &Site::ORIGIN).unwrap();
        assert!((q - 1.516_386_06).abs() < 1e-6, "quadrature {q}");
    }

    #[test]
    fn fourier_agrees_with_quadrature_off_the_origin() {
        let m = WalkModel::subordinate(3, 0.8).unwrap();
        let t = fourier::build_fourier(&m, 8, 64).unwrap();
        for c in [[0, 0, 0], [1, 0, 0], [1, 1, 0], [2, 1, 1], [5, 0, 3], [8, 8, 8]] {
            let x = Site::from_coords(&c).unwrap();
            let q = green_quadrature_at(&m, &x).unwrap();
            let g = t.at(&x);
            assert!((g - q).abs() < 1e-4 * q.max(1e-2), "{c:?}: {g} vs {q}");
        }
    }

    #[test]
    fn table_roundtrip() {
        let m = WalkModel::subordinate(3, 1.1).unwrap();
        let t = default_table(&m, 6).unwrap();
        let mut buf = Vec::new();
        write_table(&t, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"GRNT");
        let back = read_table(&buf[..]).unwrap();
        assert_eq!(back.values(), t.values());
        assert_eq!(back.far_field(), t.far_field());
        assert_eq!(back.meta(), t.meta());
        assert_eq!(back.spec(), t.spec());
        assert!(read_table(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_table(&bad[..]).is_err());
    }
}
