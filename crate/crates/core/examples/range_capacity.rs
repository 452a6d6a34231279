//! C_n / n along one path, with the range size and the occupation bound.

use rangecap::capacity::occupation_lower_bound;
use rangecap::green::default_table;
use rangecap::range::{range_capacities, range_of};
use rangecap::walk::{sample_path, LatticePath, WalkModel};
use rangecap::{Purpose, RngStream, StreamId};

fn main() {
    let m = WalkModel::subordinate(3, 0.8).unwrap();
    let t = default_table(&m, 32).unwrap();
    let mut rng = RngStream::new(11, StreamId::new(Purpose::Path, 0));
    let path = sample_path(&m, 2048, &mut rng).unwrap();
    let horizons = [128, 256, 512, 1024, 2048];
    let caps = range_capacities(&path, &horizons, &t).unwrap();
    println!("{:>6} {:>10} {:>8} {:>10}", "n", "C_n/n", "#R_n", "1/J(nu)");
    for (&n, c) in horizons.iter().zip(&caps) {
        let prefix = LatticePath::from_positions(3, path.positions()[..=n].to_vec(), None);
        let ob = occupation_lower_bound(&prefix, &t).unwrap().value;
        let size = range_of(&path, 0, n).unwrap().len();
        println!("{n:>6} {:>10.5} {size:>8} {:>10.3}", c.value / n as f64, ob);
    }
}
