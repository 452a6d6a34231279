//! Paths of the simple, subordinate and loop-free walks.

use rangecap::walk::{sample_path, WalkModel};
use rangecap::{Purpose, RngStream, StreamId};

fn main() {
    let base = WalkModel::subordinate(3, 0.8).unwrap();
    let models = [WalkModel::simple(3).unwrap(), base.clone(), base.loop_free().unwrap()];
    for m in &models {
        let mut rng = RngStream::new(7, StreamId::new(Purpose::Path, 0));
        let path = sample_path(m, 1000, &mut rng).unwrap();
        let stays = path.positions().windows(2).filter(|w| w[0] == w[1]).count();
        println!(
            "{m}: P(step = 0) = {:.4}, |S_1000| = {:.1}, stays = {stays}, first steps {:?}",
            m.loop_prob(),
            path.at(1000).euclidean_norm(),
            &path.positions()[..4]
        );
    }
}
