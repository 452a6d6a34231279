//! Binary Green table files.
//!
//! Little-endian layout:
//!
//! ```text
//! "GRNT"            magic
//! u32               format version (1)
//! u8                model kind code (base + 2 * derived)
//! u16               dimension d
//! f64               alpha
//! u32               window radius R
//! u32               length L of the metadata block, then L bytes:
//!     u8  backend (0 fourier grid, 1 occupation MC, 2 renewal series)
//!     u64 backend parameter (N, paths, terms)
//!     u64 auxiliary parameter (horizon for MC, else 0)
//!     f64 error estimate
//!     f64 one-step-loop probability
//! f64 * C(R+d, d)   reduced values, lexicographic in sorted |x_i|
//! f64, f64          far-field constant and exponent
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::table::{FarField, GreenMethod, GreenTable, SymmetricWindow, TableMeta};
use crate::error::{Error, Result};
use crate::walk::ModelSpec;

pub const MAGIC: &[u8; 4] = b"GRNT";
pub const VERSION: u32 = 1;
const META_LEN: u32 = 1 + 8 + 8 + 8 + 8;

pub fn write_table<W: Write>(table: &GreenTable, mut w: W) -> Result<()> {
    let spec = table.spec();
    let meta = table.meta();
    let (code, param, aux) = meta.method.code();
    let mut buf = Vec::with_capacity(64 + 8 * table.values().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(spec.kind_code());
    buf.extend_from_slice(&(table.d() as u16).to_le_bytes());
    buf.extend_from_slice(&table.alpha().to_le_bytes());
    buf.extend_from_slice(&(table.radius() as u32).to_le_bytes());
    buf.extend_from_slice(&META_LEN.to_le_bytes());
    buf.push(code);
    buf.extend_from_slice(&param.to_le_bytes());
    buf.extend_from_slice(&aux.to_le_bytes());
    buf.extend_from_slice(&meta.error.to_le_bytes());
    buf.extend_from_slice(&meta.loop_prob.to_le_bytes());
    for v in table.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let far = table.far_field();
    buf.extend_from_slice(&far.constant.to_le_bytes());
    buf.extend_from_slice(&far.exponent.to_le_bytes());
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Format("Green table file is truncated".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_table<R: Read>(mut r: R) -> Result<GreenTable> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let mut c = Cursor { data: &data, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Format("not a Green table (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported Green table version {version}")));
    }
    let kind = c.u8()?;
    let d = c.u16()? as usize;
    let alpha = c.f64()?;
    let radius = c.u32()? as usize;
    let meta_len = c.u32()? as usize;
    if meta_len < META_LEN as usize {
        return Err(Error::Format("metadata block too short".into()));
    }
    let mut m = Cursor {
        data: c.take(meta_len)?,
        pos: 0,
    };
    let method = GreenMethod::from_code(m.u8()?, m.u64()?, m.u64()?)?;
    let error = m.f64()?;
    let loop_prob = m.f64()?;
    let spec = ModelSpec::from_kind_code(kind, d, alpha)?;
    let window = SymmetricWindow::new(d, radius)?;
    let mut values = Vec::with_capacity(window.len());
    for _ in 0..window.len() {
        values.push(c.f64()?);
    }
    let far = FarField {
        constant: c.f64()?,
        exponent: c.f64()?,
    };
    if c.pos != data.len() {
        return Err(Error::Format("trailing bytes after Green table".into()));
    }
    GreenTable::assemble(
        spec,
        alpha,
        window,
        values,
        None,
        far,
        TableMeta {
            method,
            error,
            loop_prob,
        },
    )
}

pub fn save_table(table: &GreenTable, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_table(table, std::io::BufWriter::new(f))
}

pub fn load_table(path: &Path) -> Result<GreenTable> {
    read_table(std::fs::File::open(path)?)
}
