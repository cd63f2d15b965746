//! Binary container for named dense complex operators.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! magic     8 bytes  "DCOPS001"
//! count     u32      number of operators
//! per operator:
//!   name_len  u32
//!   name      name_len bytes, UTF-8
//!   rows      u64
//!   cols      u64
//!   entries   rows * cols pairs (re f64, im f64), column-major
//! ```

use std::io::{Read, Write};

use super::{CMatrix, C64};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"DCOPS001";

pub fn write_operators<W: Write>(mut w: W, ops: &[(&str, &CMatrix)]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(ops.len() as u32).to_le_bytes())?;
    for (name, m) in ops {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(m.nrows() as u64).to_le_bytes())?;
        w.write_all(&(m.ncols() as u64).to_le_bytes())?;
        for z in m.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_operators<R: Read>(mut r: R) -> Result<Vec<(String, CMatrix)>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an operator container (bad magic)".into()));
    }
    let count = read_u32(&mut r)?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| Error::Format("operator name is not UTF-8".into()))?;
        let rows = read_u64(&mut r)? as usize;
        let cols = read_u64(&mut r)? as usize;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Format("operator size overflows".into()))?;
        let mut entries = Vec::with_capacity(n);
        for _ in 0..n {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            entries.push(C64::new(re, im));
        }
        out.push((name, CMatrix::from_vec(rows, cols, entries)));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after last operator".into()));
    }
    Ok(out)
}
