//! Draw Sibuya(gamma) variables and compare the empirical law with the pmf.

use rangecap::walk::{Sibuya, SibuyaDraw};
use rangecap::{Purpose, RngStream, StreamId};

fn main() {
    let gamma = 0.4;
    let s = Sibuya::new(gamma).unwrap();
    let mut rng = RngStream::new(1, StreamId::new(Purpose::Increments, 0));
    let draws = 1_000_000u64;
    let mut counts = [0u64; 11];
    let mut huge = 0;
    for _ in 0..draws {
        match s.sample(&mut rng) {
            SibuyaDraw::Exact(k) if k <= 10 => counts[k as usize] += 1,
            SibuyaDraw::Huge(_) => huge += 1,
            _ => {}
        }
    }
    println!(" k   empirical   pmf");
    for k in 1..=10u64 {
        println!("{k:2}   {:.6}   {:.6}", counts[k as usize] as f64 / draws as f64, s.pmf(k));
    }
    println!("P(eta > 1000) = {:.5}, draws beyond the exact range: {huge}", s.tail(1000));
}
