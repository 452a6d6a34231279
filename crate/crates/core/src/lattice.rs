//! Points of `Z^d` with 64-bit signed coordinates.

use std::fmt;

use crate::error::{Error, Result};

/// Largest lattice dimension supported by [`Site`].
pub const MAX_DIM: usize = 6;

/// A lattice site. Coordinates beyond the working dimension are kept at zero,
/// so equality and hashing only depend on the meaningful coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Site([i64; MAX_DIM]);

pub fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::Domain(format!(
            "dimension must be in 1..={MAX_DIM}, got {d}"
        )));
    }
    Ok(())
}

impl Site {
    pub const ORIGIN: Site = Site([0; MAX_DIM]);

    pub fn from_coords(coords: &[i64]) -> Result<Site> {
        check_dim(coords.len())?;
        let mut c = [0i64; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Site(c))
    }

    /// Unit vector `sign * e_axis`.
    pub fn unit(axis: usize, negative: bool) -> Site {
        let mut c = [0i64; MAX_DIM];
        c[axis] = if negative { -1 } else { 1 };
        Site(c)
    }

    #[inline]
    pub fn raw(&self) -> &[i64; MAX_DIM] {
        &self.0
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> i64 {
        self.0[axis]
    }

    pub fn coords(&self, d: usize) -> &[i64] {
        &self.0[..d]
    }

    #[inline]
    pub fn is_origin(&self) -> bool {
        self.0 == [0; MAX_DIM]
    }

    pub fn checked_add(&self, other: &Site) -> Result<Site> {
        let mut c = [0i64; MAX_DIM];
        for (i, v) in c.iter_mut().enumerate() {
            *v = self.0[i].checked_add(other.0[i]).ok_or(Error::Overflow)?;
        }
        Ok(Site(c))
    }

    pub fn checked_sub(&self, other: &Site) -> Result<Site> {
        let mut c = [0i64; MAX_DIM];
        for (i, v) in c.iter_mut().enumerate() {
            *v = self.0[i].checked_sub(other.0[i]).ok_or(Error::Overflow)?;
        }
        Ok(Site(c))
    }

    /// Difference as floating coordinates; never overflows.
    #[inline]
    pub fn diff_f64(&self, other: &Site, d: usize, out: &mut [f64; MAX_DIM]) {
        for i in 0..d {
            out[i] = self.0[i] as f64 - other.0[i] as f64;
        }
    }

    pub fn neg(&self) -> Result<Site> {
        Site::ORIGIN.checked_sub(self)
    }

    pub fn sup_norm(&self) -> u64 {
        self.0.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn l1_norm(&self) -> u128 {
        self.0.iter().map(|v| v.unsigned_abs() as u128).sum()
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&v| {
                let f = v as f64;
                f * f
            })
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn set(&mut self, axis: usize, value: i64) {
        self.0[axis] = value;
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.0.iter().rposition(|&v| v != 0).map_or(1, |i| i + 1);
        f.debug_list().entries(&self.0[..last]).finish()
    }
}

/// Parse a whitespace separated coordinate line.
pub fn parse_site(line: &str, d: Option<usize>) -> Result<Site> {
    let coords = line
        .split_whitespace()
        .map(|t| {
            t.parse::<i64>()
                .map_err(|e| Error::Format(format!("bad coordinate {t:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(d) = d {
        if coords.len() != d {
            return Err(Error::Format(format!(
                "expected {d} coordinates, found {} in {line:?}",
                coords.len()
            )));
        }
    }
    Site::from_coords(&coords)
}

/// Read a site-set file: one site per line, blank lines and `#` comments
/// ignored. Returns the dimension and the sites in file order.
pub fn read_sites(text: &str) -> Result<(usize, Vec<Site>)> {
    let mut d = None;
    let mut sites = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let n = line.split_whitespace().count();
        let d0 = *d.get_or_insert(n);
        sites.push(parse_site(line, Some(d0))?);
    }
    let d = d.ok_or_else(|| Error::Format("site file contains no sites".into()))?;
    Ok((d, sites))
}

pub fn write_sites(sites: &[Site], d: usize) -> String {
    let mut out = String::new();
    for s in sites {
        let line: Vec<String> = s.coords(d).iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overflow_is_an_error() {
        let a = Site::from_coords(&[i64::MAX, 0]).unwrap();
        let b = Site::from_coords(&[1, 0]).unwrap();
        assert!(matches!(a.checked_add(&b), Err(Error::Overflow)));
        assert!(Site::from_coords(&[i64::MIN]).unwrap().neg().is_err());
    }

    #[test]
    fn site_file_roundtrip() {
        let text = "# two points\n0 0 0\n\n1 -2 3\n";
        let (d, sites) = read_sites(text).unwrap();
        assert_eq!(d, 3);
        assert_eq!(sites[1], Site::from_coords(&[1, -2, 3]).unwrap());
        assert_eq!(read_sites(&write_sites(&sites, d)).unwrap().1, sites);
        assert!(read_sites("0 0\n1 2 3\n").is_err());
        assert!(read_sites("# nothing\n").is_err());
    }

    #[test]
    fn dimension_bounds() {
        assert!(Site::from_coords(&[]).is_err());
        assert!(Site::from_coords(&[0; MAX_DIM + 1]).is_err());
    }
}
