use super::loops::geometric;
use super::model::{Derived, WalkModel};
use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::rng::{RngStream, StreamId};

/// Longest path [`sample_path`] will allocate.
pub const MAX_HORIZON: usize = 1 << 22;

/// A sampled trajectory `S_0, ..., S_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticePath {
    d: usize,
    positions: Vec<Site>,
    stream: Option<StreamId>,
}

impl LatticePath {
    pub fn from_positions(d: usize, positions: Vec<Site>, stream: Option<StreamId>) -> Self {
        assert!(!positions.is_empty(), "a path has at least its start");
        LatticePath {
            d,
            positions,
            stream,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn positions(&self) -> &[Site] {
        &self.positions
    }

    pub fn into_positions(self) -> Vec<Site> {
        self.positions
    }

    pub fn stream(&self) -> Option<StreamId> {
        self.stream
    }

    pub fn start(&self) -> Site {
        self.positions[0]
    }

    /// The horizon `n` (the path holds `n + 1` positions).
    pub fn horizon(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn at(&self, k: usize) -> Site {
        self.positions[k]
    }

    /// The path translated so that it starts at the origin.
    pub fn recentered(&self) -> Result<LatticePath> {
        let s0 = self.start();
        let positions = self
            .positions
            .iter()
            .map(|s| s.checked_sub(&s0))
            .collect::<Result<Vec<_>>>()?;
        Ok(LatticePath::from_positions(self.d, positions, self.stream))
    }
}

pub fn check_horizon(n: usize) -> Result<()> {
    if n > MAX_HORIZON {
        return Err(Error::Resource(format!(
            "horizon {n} exceeds the maximum {MAX_HORIZON}"
        )));
    }
    Ok(())
}

/// Sample `S_0 = 0, ..., S_n` from the model's step law.
///
/// For the loop-inserted model the path is generated as the loop-free walk
/// with geometric runs of loops, interleaving the draws.
pub fn sample_path(model: &WalkModel, n: usize, rng: &mut RngStream) -> Result<LatticePath> {
    sample_path_from(model, Site::ORIGIN, n, rng)
}

pub fn sample_path_from(
    model: &WalkModel,
    start: Site,
    n: usize,
    rng: &mut RngStream,
) -> Result<LatticePath> {
    check_horizon(n)?;
    let mut positions = Vec::with_capacity(n + 1);
    positions.push(start);
    let mut cur = start;
    match model.derived() {
        Some(Derived::LoopInserted) => {
            let p = model.base_loop_prob();
            let free = model.loop_free()?;
            'outer: loop {
                for _ in 0..geometric(p, rng) {
                    if positions.len() > n {
                        break 'outer;
                    }
                    positions.push(cur);
                }
                if positions.len() > n {
                    break;
                }
                cur = cur.checked_add(&free.sample_increment(rng)?)?;
                positions.push(cur);
            }
        }
        _ => {
            for _ in 0..n {
                cur = cur.checked_add(&model.sample_increment(rng)?)?;
                positions.push(cur);
            }
        }
    }
    Ok(LatticePath::from_positions(model.d(), positions, Some(rng.id())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;

    #[test]
    fn zero_horizon() {
        let m = WalkModel::subordinate(3, 0.8).unwrap();
        let mut r = RngStream::new(1, StreamId::new(Purpose::Path, 0));
        let p = sample_path(&m, 0, &mut r).unwrap();
        assert_eq!(p.positions(), &[Site::ORIGIN]);
        assert!(sample_path(&m, MAX_HORIZON + 1, &mut r).is_err());
    }

    #[test]
    fn deterministic_given_stream() {
        let m = WalkModel::subordinate(3, 0.8).unwrap();
        for model in [m.clone(), m.loop_free().unwrap(), m.loop_inserted()] {
            let id = StreamId::new(Purpose::Path, 4);
            let a = sample_path(&model, 300, &mut RngStream::new(11, id)).unwrap();
            let b = sample_path(&model, 300, &mut RngStream::new(11, id)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.horizon(), 300);
        }
    }

    #[test]
    fn simple_walk_two_steps_returns_half_the_time() {
        let m = WalkModel::simple(1).unwrap();
        let n = 200_000;
        let mut back = 0usize;
        for i in 0..n {
            let mut r = RngStream::new(3, StreamId::new(Purpose::Path, i));
            if sample_path(&m, 2, &mut r).unwrap().at(2).is_origin() {
                back += 1;
            }
        }
        let f = back as f64 / n as f64;
        assert!((f - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(), "{f}");
    }
}
