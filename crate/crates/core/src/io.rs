//! Binary field files and atomic report writing.
//!
//! Spinor field file (little-endian):
//!
//! ```text
//! "DTL1" | rank: u32 | n: u32 | L: f64 | n³ nodes × rank × (re: f64, im: f64)
//! ```
//!
//! nodes in x-fastest order, the spinor components of each node contiguous.
//!
//! Real field file (sampled potentials and gauge functions):
//!
//! ```text
//! nx: u64 | ny: u64 | nz: u64 | L: f64 | one or more blocks of n³ f64
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{DtlError, Result};
use crate::grid::{Field, Grid3D, Rank};
use crate::C64;

pub const FIELD_MAGIC: &[u8; 4] = b"DTL1";

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    let grid = field.grid();
    let n = grid.len();
    let rc = field.rank().components();
    let mut buf = Vec::with_capacity(20 + 16 * rc * n);
    buf.extend_from_slice(FIELD_MAGIC);
    buf.extend_from_slice(&(rc as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.half_width().to_le_bytes());
    let data = field.data();
    for idx in 0..n {
        for c in 0..rc {
            let z = data[c * n + idx];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    write_atomic(path, &buf)
}

pub fn read_field(path: &Path) -> Result<Field> {
    let bytes = read_all(path)?;
    if bytes.len() < 20 || &bytes[0..4] != FIELD_MAGIC {
        return Err(DtlError::Format(format!(
            "{}: missing DTL1 header",
            path.display()
        )));
    }
    let rc = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let rank = Rank::from_components(rc)?;
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let l = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let grid =
        Grid3D::new(n, l).map_err(|e| DtlError::Format(format!("{}: {e}", path.display())))?;
    let len = grid.len();
    if bytes.len() != 20 + 16 * rc * len {
        return Err(DtlError::Format(format!(
            "{}: expected {} payload bytes, found {}",
            path.display(),
            16 * rc * len,
            bytes.len() - 20
        )));
    }
    let mut data = vec![C64::default(); rc * len];
    let mut floats = bytes[20..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()));
    for idx in 0..len {
        for c in 0..rc {
            let re = floats.next().unwrap();
            let im = floats.next().unwrap();
            data[c * len + idx] = C64::new(re, im);
        }
    }
    Field::from_data(grid, rank, data)
}

pub fn write_real_fields(path: &Path, grid: &Grid3D, fields: &[&[f64]]) -> Result<()> {
    let mut buf = Vec::with_capacity(32 + 8 * grid.len() * fields.len());
    for _ in 0..3 {
        buf.extend_from_slice(&(grid.n() as u64).to_le_bytes());
    }
    buf.extend_from_slice(&grid.half_width().to_le_bytes());
    for f in fields {
        if f.len() != grid.len() {
            return Err(DtlError::GridMismatch(format!(
                "{} values on {} nodes",
                f.len(),
                grid.len()
            )));
        }
        for v in *f {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_atomic(path, &buf)
}

pub fn read_real_fields(path: &Path) -> Result<(Grid3D, Vec<Vec<f64>>)> {
    let bytes = read_all(path)?;
    if bytes.len() < 32 {
        return Err(DtlError::Format(format!(
            "{}: truncated header",
            path.display()
        )));
    }
    let counts: Vec<u64> = (0..3)
        .map(|a| u64::from_le_bytes(bytes[8 * a..8 * a + 8].try_into().unwrap()))
        .collect();
    if counts[0] != counts[1] || counts[1] != counts[2] {
        return Err(DtlError::Format(format!(
            "{}: non-cubic grid {:?}",
            path.display(),
            counts
        )));
    }
    let l = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let grid = Grid3D::new(counts[0] as usize, l)
        .map_err(|e| DtlError::Format(format!("{}: {e}", path.display())))?;
    let block = 8 * grid.len();
    let payload = &bytes[32..];
    if payload.is_empty() || payload.len() % block != 0 {
        return Err(DtlError::Format(format!(
            "{}: payload of {} bytes is not a whole number of {}-byte fields",
            path.display(),
            payload.len(),
            block
        )));
    }
    let fields: Vec<Vec<f64>> = payload
        .chunks_exact(block)
        .map(|c| {
            c.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    if fields.iter().flatten().any(|v| !v.is_finite()) {
        return Err(DtlError::NonFinite(format!("{}", path.display())));
    }
    Ok((grid, fields))
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    r.read_to_end(&mut out)?;
    Ok(out)
}

/// Write `bytes` to a sibling temporary file, then rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| DtlError::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(bytes)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json_atomic<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid3D::new(8, 2.5).unwrap();
        for rank in [Rank::Two, Rank::Four] {
            let f = Field::random(g, rank, 5);
            let p = dir.path().join("f.bin");
            write_field(&p, &f).unwrap();
            assert_eq!(
                fs::metadata(&p).unwrap().len() as usize,
                20 + 16 * rank.components() * g.len()
            );
            assert_eq!(read_field(&p).unwrap(), f);
        }
    }

    #[test]
    fn field_header_layout() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid3D::new(8, 1.0).unwrap();
        let f = Field::constant(g, &[C64::new(1.0, 2.0), C64::new(3.0, 4.0)]).unwrap();
        let p = dir.path().join("c.bin");
        write_field(&p, &f).unwrap();
        let b = fs::read(&p).unwrap();
        assert_eq!(&b[0..4], b"DTL1");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(b[12..20].try_into().unwrap()), 1.0);
        let first: Vec<f64> = b[20..52]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(first, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn corrupt_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.bin");
        fs::write(&p, b"NOPE0000000000000000").unwrap();
        assert!(matches!(read_field(&p), Err(DtlError::Format(_))));
        fs::write(&p, [0u8; 40]).unwrap();
        assert!(read_real_fields(&p).is_err());
    }

    #[test]
    fn real_fields_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid3D::new(8, 3.0).unwrap();
        let a: Vec<f64> = (0..g.len()).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..g.len()).map(|i| -(i as f64) * 0.5).collect();
        let p = dir.path().join("r.bin");
        write_real_fields(&p, &g, &[&a, &b]).unwrap();
        let (g2, f) = read_real_fields(&p).unwrap();
        assert_eq!(g2, g);
        assert_eq!(f, vec![a, b]);
    }
}
