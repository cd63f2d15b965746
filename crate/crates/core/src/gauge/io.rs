//! Lattice file formats for connections and curvature maps.
//!
//! Both formats carry the grid shape, spacing and component count. Grids are
//! assumed centred on the origin. Values are point-major in row-major grid
//! order (last axis fastest) with components innermost.
//!
//! Binary (all little-endian):
//!
//! ```text
//! magic       8 bytes   "DCLAT001"
//! ndim        u32
//! components  u32
//! shape       ndim x u64
//! spacing     ndim x f64
//! values      (prod(shape) * components) x f64
//! ```
//!
//! CSV: four `#` header lines, a column header, then one row per point:
//!
//! ```text
//! # dualchart lattice v1
//! # shape=64,64
//! # spacing=0.05,0.05
//! # components=2
//! i0,i1,c0,c1
//! 0,0,1.6e0,-1.6e0
//! ```
//!
//! Curvature maps store the `mu < nu` pairs as components, NaN off the valid
//! interior.

use std::io::{BufRead, Read, Write};

use super::{CurvatureTensor, Grid, LatticeConnection};
use crate::error::{Error, Result};
use crate::phase_space::PhysicalConstants;

const MAGIC: &[u8; 8] = b"DCLAT001";
const CSV_BANNER: &str = "# dualchart lattice v1";

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeData {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub components: usize,
    pub values: Vec<f64>,
}

impl LatticeData {
    fn points(&self) -> usize {
        self.shape.iter().product()
    }

    fn check(&self) -> Result<()> {
        if self.shape.len() != self.spacing.len() {
            return Err(Error::Format("shape and spacing lengths differ".into()));
        }
        if self.values.len() != self.points() * self.components {
            return Err(Error::Format(format!(
                "expected {} values, found {}",
                self.points() * self.components,
                self.values.len()
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.shape.clone(), self.spacing.clone())
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        self.check()?;
        w.write_all(MAGIC)?;
        w.write_all(&(self.shape.len() as u32).to_le_bytes())?;
        w.write_all(&(self.components as u32).to_le_bytes())?;
        for &n in &self.shape {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        for &a in &self.spacing {
            w.write_all(&a.to_le_bytes())?;
        }
        for &v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a lattice file (bad magic)".into()));
        }
        let mut u32buf = [0u8; 4];
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u32buf)?;
        let ndim = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf)?;
        let components = u32::from_le_bytes(u32buf) as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            r.read_exact(&mut u64buf)?;
            shape.push(u64::from_le_bytes(u64buf) as usize);
        }
        let mut spacing = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            r.read_exact(&mut u64buf)?;
            spacing.push(f64::from_le_bytes(u64buf));
        }
        let count = shape
            .iter()
            .try_fold(components, |acc: usize, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::Format("lattice size overflows".into()))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * count {
            return Err(Error::Format(format!(
                "expected {} value bytes, found {}",
                8 * count,
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let data = Self {
            shape,
            spacing,
            components,
            values,
        };
        data.check()?;
        Ok(data)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        self.check()?;
        let join = |v: Vec<String>| v.join(",");
        writeln!(w, "{CSV_BANNER}")?;
        writeln!(
            w,
            "# shape={}",
            join(self.shape.iter().map(|n| n.to_string()).collect())
        )?;
        writeln!(
            w,
            "# spacing={}",
            join(self.spacing.iter().map(|a| format!("{a:e}")).collect())
        )?;
        writeln!(w, "# components={}", self.components)?;
        let mut header: Vec<String> = (0..self.shape.len()).map(|i| format!("i{i}")).collect();
        header.extend((0..self.components).map(|c| format!("c{c}")));
        writeln!(w, "{}", header.join(","))?;
        let grid = Grid::new(self.shape.clone(), self.spacing.clone())?;
        for idx in 0..self.points() {
            let mut row: Vec<String> = grid.coords(idx).iter().map(|c| c.to_string()).collect();
            row.extend(
                self.values[idx * self.components..(idx + 1) * self.components]
                    .iter()
                    .map(|v| format!("{v:e}")),
            );
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Format("unexpected end of lattice csv".into()))?
                .map_err(Error::from)
        };
        if next()?.trim() != CSV_BANNER {
            return Err(Error::Format("missing lattice csv banner".into()));
        }
        let field = |line: String, key: &str| -> Result<String> {
            line.strip_prefix(&format!("# {key}="))
                .map(|s| s.trim().to_string())
                .ok_or_else(|| Error::Format(format!("expected `# {key}=` header")))
        };
        let parse_err = |what: &str| Error::Format(format!("cannot parse {what}"));
        let shape: Vec<usize> = field(next()?, "shape")?
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| parse_err("shape")))
            .collect::<Result<_>>()?;
        let spacing: Vec<f64> = field(next()?, "spacing")?
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| parse_err("spacing")))
            .collect::<Result<_>>()?;
        let components: usize = field(next()?, "components")?
            .parse()
            .map_err(|_| parse_err("components"))?;
        let _column_header = next()?;
        let grid = Grid::new(shape.clone(), spacing.clone())?;
        let mut values = vec![f64::NAN; grid.len() * components];
        let mut seen = 0usize;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != shape.len() + components {
                return Err(Error::Format(format!("row has {} cells: {line}", cells.len())));
            }
            let coords: Vec<usize> = cells[..shape.len()]
                .iter()
                .map(|s| s.parse().map_err(|_| parse_err("grid index")))
                .collect::<Result<_>>()?;
            let idx = grid
                .index(&coords)
                .ok_or_else(|| Error::Format(format!("grid index {coords:?} out of range")))?;
            for (c, s) in cells[shape.len()..].iter().enumerate() {
                values[idx * components + c] = s.parse().map_err(|_| parse_err("value"))?;
            }
            seen += 1;
        }
        if seen != grid.len() {
            return Err(Error::Format(format!("expected {} rows, found {seen}", grid.len())));
        }
        let data = Self {
            shape,
            spacing,
            components,
            values,
        };
        data.check()?;
        Ok(data)
    }
}

impl LatticeConnection {
    pub fn to_data(&self) -> LatticeData {
        LatticeData {
            shape: self.grid.shape().to_vec(),
            spacing: self.grid.spacing().to_vec(),
            components: self.grid.ndim(),
            values: self.values.clone(),
        }
    }

    pub fn from_data(data: &LatticeData, constants: PhysicalConstants) -> Result<Self> {
        let grid = data.grid()?;
        if data.components != grid.ndim() {
            return Err(Error::Format(format!(
                "connection needs {} components per point, file has {}",
                grid.ndim(),
                data.components
            )));
        }
        LatticeConnection::new(grid, data.values.clone(), constants)
    }
}

impl CurvatureTensor {
    pub fn to_data(&self) -> LatticeData {
        let pairs = self.components.len();
        let mut values = Vec::with_capacity(self.grid.len() * pairs);
        for idx in 0..self.grid.len() {
            values.extend(self.components.iter().map(|c| c[idx]));
        }
        LatticeData {
            shape: self.grid.shape().to_vec(),
            spacing: self.grid.spacing().to_vec(),
            components: pairs,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{curvature_from_commutator, default_test_field};
    use proptest::prelude::*;

    fn sample_connection() -> LatticeConnection {
        let g = Grid::new(vec![5, 4], vec![0.1, 0.25]).unwrap();
        LatticeConnection::symmetric_gauge(g, PhysicalConstants::default(), 1.5).unwrap()
    }

    #[test]
    fn binary_header_layout() {
        let data = sample_connection().to_data();
        let mut buf = Vec::new();
        data.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"DCLAT001");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[16..24].try_into().unwrap()), 5);
        assert_eq!(buf.len(), 8 + 4 + 4 + 16 + 16 + 8 * 40);
        let back = LatticeData::read_binary(&buf[..]).unwrap();
        assert_eq!(back, data);
        let conn = LatticeConnection::from_data(&back, PhysicalConstants::default()).unwrap();
        assert_eq!(conn, sample_connection());
    }

    #[test]
    fn csv_round_trip_of_curvature_with_nan_margin() {
        let conn = sample_connection();
        let curv = curvature_from_commutator(&conn, &default_test_field(conn.grid())).unwrap();
        let data = curv.to_data();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# dualchart lattice v1\n# shape=5,4\n"));
        let back = LatticeData::read_csv(&buf[..]).unwrap();
        assert_eq!(back.shape, data.shape);
        assert_eq!(back.components, 1);
        for (a, b) in back.values.iter().zip(&data.values) {
            assert!((a.is_nan() && b.is_nan()) || a == b);
        }
    }

    #[test]
    fn malformed_inputs_rejected() {
        assert!(LatticeData::read_binary(&b"NOTMAGIC"[..]).is_err());
        let mut buf = Vec::new();
        sample_connection().to_data().write_binary(&mut buf).unwrap();
        buf.pop();
        assert!(LatticeData::read_binary(&buf[..]).is_err());
        let csv = "# dualchart lattice v1\n# shape=3,3\n# spacing=1,1\n# components=1\ni0,i1,c0\n0,0,1\n";
        assert!(LatticeData::read_csv(csv.as_bytes()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn both_formats_round_trip(
            n0 in 3usize..6, n1 in 3usize..6, comps in 1usize..3,
            a0 in 0.01f64..2.0, a1 in 0.01f64..2.0,
            seed in proptest::collection::vec(-1e3f64..1e3, 50),
        ) {
            let count = n0 * n1 * comps;
            let values: Vec<f64> = (0..count).map(|i| seed[i % seed.len()] * (1.0 + i as f64)).collect();
            let data = LatticeData { shape: vec![n0, n1], spacing: vec![a0, a1], components: comps, values };
            let mut bin = Vec::new();
            data.write_binary(&mut bin).unwrap();
            prop_assert_eq!(LatticeData::read_binary(&bin[..]).unwrap(), data.clone());
            let mut csv = Vec::new();
            data.write_csv(&mut csv).unwrap();
            prop_assert_eq!(LatticeData::read_csv(&csv[..]).unwrap(), data);
        }
    }
}
