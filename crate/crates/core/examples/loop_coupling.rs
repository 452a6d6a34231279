//! Re-insert one-step loops into a loop-free path and check that the ranges
//! line up.

use rangecap::experiments::coupled_ranges_agree;
use rangecap::walk::{insert_loops, sample_path, WalkModel};
use rangecap::{Purpose, RngStream, StreamId};

fn main() {
    let m = WalkModel::subordinate(3, 0.8).unwrap();
    let p = m.loop_prob();
    let lf = m.loop_free().unwrap();
    let mut rng = RngStream::new(2, StreamId::new(Purpose::CoupledPath, 0));
    let tilde = sample_path(&lf, 20, &mut rng).unwrap();
    let (hat, rec) = insert_loops(&tilde, p, &mut rng).unwrap();
    println!("p = {p:.4}; loop-free length {}, with loops {}", tilde.horizon(), hat.horizon());
    for k in 0..tilde.horizon() {
        if rec.xi[k] > 0 {
            println!("  S~_{k} = {:?} repeated at times {:?}", tilde.at(k), rec.interval(k));
        }
    }
    println!("  S^_(n + N_n) = S~_n at n = 20: {}", hat.at(20 + rec.n(20) as usize) == tilde.at(20));
    println!("ranges agree: {}", coupled_ranges_agree(&tilde, &hat, &rec));
}
