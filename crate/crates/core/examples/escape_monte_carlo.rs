//! Capacity from simulated escape probabilities against the linear solve.

use rangecap::capacity::{capacity_exact, capacity_mc, HorizonSchedule};
use rangecap::green::default_table;
use rangecap::walk::WalkModel;
use rangecap::Site;

fn main() {
    let m = WalkModel::subordinate(3, 0.8).unwrap();
    let t = default_table(&m, 8).unwrap();
    let sets = [
        vec![Site::ORIGIN],
        vec![Site::ORIGIN, Site::from_coords(&[1, 1, 0]).unwrap()],
        vec![Site::ORIGIN, Site::from_coords(&[1000, 0, 0]).unwrap()],
    ];
    for a in &sets {
        let exact = capacity_exact(a, &t).unwrap().0.value;
        let mc = capacity_mc(a, &m, HorizonSchedule::default(), 50_000, 3).unwrap();
        println!(
            "{a:?}: exact {exact:.5}, mc {:.5} +- {:.5} (horizon {}, flagged {})",
            mc.value, mc.std_err, mc.horizon, mc.flagged
        );
    }
}
