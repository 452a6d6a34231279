//! Re-inserting one-step loops into a loop-free path.
//!
//! Given a loop-free path `S~` and i.i.d. geometric `xi_0, xi_1, ...` with
//! `P(xi = k) = p^k (1 - p)`, the path `S^` stays `xi_k` extra steps at
//! `S~_k` before jumping to `S~_{k+1}`. With `N_k = xi_0 + ... + xi_k` the
//! repeated positions occupy `I_k = [k + N_{k-1} + 1, k + N_k]` and
//! `S^_{k + N_k} = S~_k`. If `S~` has the loop-free law of a walk with
//! `P(X = 0) = p`, then `S^` has the law of that walk.

use super::path::LatticePath;
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoopInsertionRecord {
    pub xi: Vec<u64>,
    /// `cum[k] = N_k`.
    pub cum: Vec<u64>,
}

impl LoopInsertionRecord {
    pub fn from_xi(xi: Vec<u64>) -> Self {
        let mut acc = 0u64;
        let cum = xi
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect();
        LoopInsertionRecord { xi, cum }
    }

    /// `N_k`, with `N_{-1} = 0` written as `n_before(k) = N_{k-1}`.
    pub fn n(&self, k: usize) -> u64 {
        self.cum[k]
    }

    pub fn n_before(&self, k: usize) -> u64 {
        if k == 0 {
            0
        } else {
            self.cum[k - 1]
        }
    }

    /// `I_k` as a half-open index range (empty when `xi_k = 0`).
    pub fn interval(&self, k: usize) -> std::ops::Range<u64> {
        let k64 = k as u64;
        (k64 + self.n_before(k) + 1)..(k64 + self.n(k) + 1)
    }
}

/// `P(xi >= k) = p^k`.
#[inline]
pub fn geometric(p: f64, rng: &mut RngStream) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    let u = rng.uniform_open0();
    (u.ln() / p.ln()).floor() as u64
}

/// Build `S^` from a loop-free `S~`; see the module docs.
pub fn insert_loops(
    path_tilde: &LatticePath,
    p: f64,
    rng: &mut RngStream,
) -> Result<(LatticePath, LoopInsertionRecord)> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("loop probability must be in [0, 1), got {p}")));
    }
    let pos = path_tilde.positions();
    if pos.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Domain("input path contains one-step loops".into()));
    }
    let xi: Vec<u64> = (0..pos.len()).map(|_| geometric(p, rng)).collect();
    insert_loops_with(path_tilde, xi)
}

/// Deterministic part of [`insert_loops`] for given `xi_0 .. xi_n`.
pub fn insert_loops_with(
    path_tilde: &LatticePath,
    xi: Vec<u64>,
) -> Result<(LatticePath, LoopInsertionRecord)> {
    let pos = path_tilde.positions();
    assert_eq!(xi.len(), pos.len(), "one geometric draw per position");
    let record = LoopInsertionRecord::from_xi(xi);
    let total = pos.len() as u64 + record.cum.last().copied().unwrap_or(0);
    if total > super::path::MAX_HORIZON as u64 + 1 {
        return Err(Error::Resource(format!("loop-inserted path of length {total}")));
    }
    let mut out = Vec::with_capacity(total as usize);
    for (k, s) in pos.iter().enumerate() {
        for _ in 0..=record.xi[k] {
            out.push(*s);
        }
    }
    Ok((
        LatticePath::from_positions(path_tilde.d(), out, path_tilde.stream()),
        record,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Site;
    use crate::rng::{Purpose, StreamId};

    fn line(points: &[i64]) -> LatticePath {
        let pos = points
            .iter()
            .map(|&x| Site::from_coords(&[x]).unwrap())
            .collect();
        LatticePath::from_positions(1, pos, None)
    }

    #[test]
    fn no_loops_is_identity() {
        let t = line(&[0, 1, 2, 1]);
        let (h, rec) = insert_loops_with(&t, vec![0; 4]).unwrap();
        assert_eq!(h.positions(), t.positions());
        assert!(rec.interval(2).is_empty());
    }

    #[test]
    fn hand_traced_intervals() {
        let t = line(&[0, 1, 2]);
        let (h, rec) = insert_loops_with(&t, vec![2, 0, 0]).unwrap();
        assert_eq!(rec.interval(0), 1..3);
        let x: Vec<i64> = h.positions().iter().map(|s| s.coord(0)).collect();
        assert_eq!(x, vec![0, 0, 0, 1, 2]);
        // S^_1 = S^_2 = S~_0, S^_3 = S~_1
        assert_eq!(h.at(3), t.at(1));
    }

    #[test]
    fn index_identity_on_random_input() {
        let mut r = RngStream::new(7, StreamId::new(Purpose::Test, 0));
        let t = line(&(0..200).collect::<Vec<_>>());
        let (h, rec) = insert_loops(&t, 0.3, &mut r).unwrap();
        for k in 0..t.positions().len() {
            assert_eq!(h.at(k + rec.n(k) as usize), t.at(k));
            for i in rec.interval(k) {
                assert_eq!(h.at(i as usize), t.at(k));
            }
        }
        assert!(insert_loops(&line(&[0, 0]), 0.3, &mut r).is_err());
        assert!(insert_loops(&t, 1.0, &mut r).is_err());
    }

    #[test]
    fn geometric_law() {
        let mut r = RngStream::new(8, StreamId::new(Purpose::Test, 0));
        let p = 0.25;
        let n = 200_000;
        let mut c = [0usize; 4];
        for _ in 0..n {
            let g = geometric(p, &mut r) as usize;
            if g < 4 {
                c[g] += 1;
            }
        }
        for (k, &ck) in c.iter().enumerate() {
            let q = p.powi(k as i32) * (1.0 - p);
            let se = (q * (1.0 - q) / n as f64).sqrt();
            assert!((ck as f64 / n as f64 - q).abs() < 4.0 * se);
        }
    }
}
