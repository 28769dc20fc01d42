//! Field serialization: CSV (`x1[,x2[,x3]],value`) and a flat little-endian
//! binary format with a 32-byte header:
//!
//! | bytes  | content                  |
//! |--------|--------------------------|
//! | 0..4   | magic `FHHF`             |
//! | 4..8   | format version (u32)     |
//! | 8..12  | dimension N (u32)        |
//! | 12..16 | points per axis n (u32)  |
//! | 16..24 | half-period L (f64)      |
//! | 24..32 | reserved, zero           |
//!
//! followed by `n^N` f64 values in row-major order.

use std::io::{Read, Write};
use std::path::Path;

use super::{Field, SpatialGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FHHF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

impl Field {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.grid().dim();
        let header: Vec<String> = (1..=dim).map(|a| format!("x{a}")).collect();
        writeln!(out, "{},value", header.join(","))?;
        for (j, v) in self.values().iter().enumerate() {
            let x = self.grid().point(j);
            for xa in &x[..dim] {
                write!(out, "{xa:.16e},")?;
            }
            writeln!(out, "{v:.16e}")?;
        }
        Ok(())
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let g = self.grid();
        let mut header = [0u8; HEADER_LEN];
        header[0..4].copy_from_slice(MAGIC);
        header[4..8].copy_from_slice(&VERSION.to_le_bytes());
        header[8..12].copy_from_slice(&(g.dim() as u32).to_le_bytes());
        header[12..16].copy_from_slice(&(g.points() as u32).to_le_bytes());
        header[16..24].copy_from_slice(&g.half_period().to_le_bytes());
        out.write_all(&header)?;
        let mut body = Vec::with_capacity(8 * self.values().len());
        for v in self.values() {
            body.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&body)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        input.read_exact(&mut header)?;
        if &header[0..4] != MAGIC {
            return Err(Error::Format("missing FHHF magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported field format version {version}")));
        }
        let dim = u32_at(8) as usize;
        let points = u32_at(12) as usize;
        let half_period = f64::from_le_bytes(header[16..24].try_into().unwrap());
        let grid = SpatialGrid::new(dim, half_period, points).map_err(|e| Error::Format(e.to_string()))?;
        let mut body = vec![0u8; 8 * grid.len()];
        input.read_exact(&mut body)?;
        let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Field::new(grid, values)
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_binary(file)
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_binary(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }
}
