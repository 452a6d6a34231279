//! Equilibrium measure and capacity of small sets.

use rangecap::capacity::capacity_exact;
use rangecap::green::default_table;
use rangecap::walk::WalkModel;
use rangecap::Site;

fn main() {
    let m = WalkModel::subordinate(3, 0.8).unwrap();
    let t = default_table(&m, 8).unwrap();
    let x = Site::from_coords(&[1, 0, 0]).unwrap();
    let (c, _) = capacity_exact(&[Site::ORIGIN, x], &t).unwrap();
    println!("Cap{{0, e1}} = {:.8}, closed form {:.8}", c.value, 2.0 / (t.origin() + t.at(&x)));

    // A 3x3x3 cube: corner sites escape more often than the center.
    let cube: Vec<Site> = (0..27).map(|i| Site::from_coords(&[i % 3, (i / 3) % 3, i / 9]).unwrap()).collect();
    let (c, eq) = capacity_exact(&cube, &t).unwrap();
    println!("Cap(cube) = {:.6}, residual {:.1e}", c.value, eq.residual);
    for (s, e) in eq.sites.iter().zip(&eq.escape).take(5) {
        println!("  escape from {s:?}: {e:.5}");
    }
    println!("  escape from the center: {:.5}", eq.escape[13]);
}
