//! Union bounds for two sets and the dyadic bounds along a path.

use rangecap::capacity::check_decomposition;
use rangecap::green::default_table;
use rangecap::range::dyadic_check;
use rangecap::walk::{sample_path, WalkModel};
use rangecap::{Purpose, RngStream, Site, StreamId};

fn main() {
    let m = WalkModel::subordinate(3, 0.8).unwrap();
    let t = default_table(&m, 16).unwrap();
    let s = |c: [i64; 3]| Site::from_coords(&c).unwrap();
    let a = [s([0, 0, 0]), s([1, 0, 0]), s([2, 0, 0])];
    let b = [s([2, 0, 0]), s([2, 1, 0]), s([2, 2, 0])];
    println!("{:#?}", check_decomposition(&a, &b, &t).unwrap());

    let mut rng = RngStream::new(5, StreamId::new(Purpose::Path, 0));
    let path = sample_path(&m, 512, &mut rng).unwrap();
    for l in 1..=4 {
        let c = dyadic_check(&path, 512, l, &t).unwrap();
        println!("L = {l}: C_n = {:.3}, lower slack {:.3}, upper slack {:.3}", c.capacity, c.lower_slack, c.upper_slack);
    }
}
