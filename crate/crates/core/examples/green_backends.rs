//! Build a Green table with each backend, compare them and round-trip the
//! binary file format.

use rangecap::green::{build_green_table, fourier, load_table, save_table, GreenMethod};
use rangecap::walk::WalkModel;
use rangecap::Site;

fn main() {
    let m = WalkModel::subordinate(3, 0.8).unwrap();
    let r = 4;
    let methods = [
        GreenMethod::FourierGrid { n: fourier::grid_for_radius(3, r) },
        GreenMethod::RenewalSeries { terms: 4096 },
        GreenMethod::OccupationMc { paths: 100_000, horizon: 256 },
    ];
    let tables: Vec<_> = methods.iter().map(|&k| build_green_table(&m, r, k, 1).unwrap()).collect();
    println!("{:>10} {:>12} {:>12} {:>12}", "x", "fourier", "renewal", "occupation");
    for c in [[0, 0, 0], [1, 0, 0], [1, 1, 0], [2, 1, 0], [4, 4, 4], [20, 0, 0]] {
        let x = Site::from_coords(&c).unwrap();
        let v: Vec<f64> = tables.iter().map(|t| t.at(&x)).collect();
        println!("{:>10} {:12.6} {:12.6} {:12.6}", format!("{c:?}"), v[0], v[1], v[2]);
    }
    let path = std::env::temp_dir().join("rangecap_example.grnt");
    save_table(&tables[0], &path).unwrap();
    let back = load_table(&path).unwrap();
    println!("round trip through {}: identical = {}", path.display(), back.values() == tables[0].values());
}
