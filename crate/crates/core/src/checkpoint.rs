//! Binary field checkpoints and their JSON sidecars.
//!
//! Layout, all little-endian: magic `NLSF`, version `u32`, dim `u32`,
//! points per axis `u32`, box length `f64`, eight reserved bytes (written
//! as zero, ignored on read), then `M^dim` samples as interleaved
//! `(re, im)` `f64` pairs in row-major order.

use crate::field::{FieldMeta, FieldState, GridSpec};
use num_complex::Complex64;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"NLSF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("file shorter than header ({0} bytes)")]
    Truncated(usize),
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u32),
    #[error("invalid grid in header: {0}")]
    BadGrid(String),
    #[error("payload is {got} bytes, header implies {expected}")]
    PayloadLength { expected: usize, got: usize },
    #[error("sidecar: {0}")]
    Sidecar(#[from] serde_json::Error),
}

pub fn encode(grid: &GridSpec, values: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim as u32).to_le_bytes());
    out.extend_from_slice(&(grid.points as u32).to_le_bytes());
    out.extend_from_slice(&grid.box_length.to_le_bytes());
    out.extend_from_slice(&[0u8; 8]);
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

/// Parses a checkpoint. Never panics on malformed input.
pub fn decode(bytes: &[u8]) -> Result<(GridSpec, Vec<Complex64>), CheckpointError> {
    if bytes.len() < HEADER_LEN {
        return Err(CheckpointError::Truncated(bytes.len()));
    }
    let magic: [u8; 4] = bytes[0..4].try_into().expect("4 bytes");
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic(magic));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let dim = u32_at(bytes, 8) as usize;
    let points = u32_at(bytes, 12) as usize;
    let box_length = f64_at(bytes, 16);
    let grid = GridSpec::new(dim, box_length, points).map_err(|e| CheckpointError::BadGrid(e.to_string()))?;
    let expected = (points as u128).pow(dim as u32) * 16;
    let got = bytes.len() - HEADER_LEN;
    if expected != got as u128 {
        return Err(CheckpointError::PayloadLength { expected: expected.min(usize::MAX as u128) as usize, got });
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| Complex64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    Ok((grid, values))
}

/// `run.bin` → `run.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

pub fn parse_sidecar(text: &str) -> Result<FieldMeta, CheckpointError> {
    Ok(serde_json::from_str(text)?)
}

/// Writes the binary file and its sidecar.
pub fn write(path: &Path, state: &FieldState, meta: &FieldMeta) -> Result<(), CheckpointError> {
    std::fs::write(path, encode(&state.grid, &state.values))?;
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

/// Reads a checkpoint; the time comes from the sidecar when present.
pub fn read(path: &Path) -> Result<(FieldState, Option<FieldMeta>), CheckpointError> {
    let (grid, values) = decode(&std::fs::read(path)?)?;
    let side = sidecar_path(path);
    let meta = if side.exists() { Some(parse_sidecar(&std::fs::read_to_string(side)?)?) } else { None };
    let time = meta.map(|m| m.time).unwrap_or(0.0);
    Ok((FieldState { grid, values, time }, meta))
}
