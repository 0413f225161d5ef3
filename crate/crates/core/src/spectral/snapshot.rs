//! Binary field snapshots and plot-ready CSV export.
//!
//! Layout (little endian): `b"FLMF"`, version `u32`, `N` as `u64`, `L` as
//! `f64`, then `N` samples as `f64`.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use super::{Grid, RealField, SpectralError};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"FLMF";
const SNAPSHOT_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a field snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    BadVersion(u32),
    #[error("snapshot truncated: expected {expected} bytes, found {got}")]
    Truncated { expected: usize, got: usize },
    #[error(transparent)]
    Field(#[from] SpectralError),
}

pub fn encode_snapshot(field: &RealField) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * field.len());
    out.extend_from_slice(&SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.n_points() as u64).to_le_bytes());
    out.extend_from_slice(&grid.length().to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<RealField, SnapshotError> {
    if bytes.len() < HEADER_LEN {
        return Err(SnapshotError::Truncated {
            expected: HEADER_LEN,
            got: bytes.len(),
        });
    }
    if bytes[0..4] != SNAPSHOT_MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != SNAPSHOT_VERSION {
        return Err(SnapshotError::BadVersion(version));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let length = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = n
        .checked_mul(8)
        .and_then(|b| b.checked_add(HEADER_LEN))
        .ok_or(SnapshotError::Truncated { expected: usize::MAX, got: bytes.len() })?;
    if bytes.len() != expected {
        return Err(SnapshotError::Truncated {
            expected,
            got: bytes.len(),
        });
    }
    let grid = Grid::new(length, n)?;
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(RealField::new(grid, values)?)
}

pub fn write_snapshot(path: impl AsRef<Path>, field: &RealField) -> Result<(), SnapshotError> {
    fs::write(path, encode_snapshot(field))?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<RealField, SnapshotError> {
    decode_snapshot(&fs::read(path)?)
}

/// Two columns, `x,value`, one row per node.
pub fn write_field_csv(path: impl AsRef<Path>, field: &RealField) -> io::Result<()> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "x,value")?;
    for (x, v) in field.grid().nodes().iter().zip(field.values()) {
        writeln!(out, "{x:e},{v:e}")?;
    }
    out.flush()
}
