//! Grid snapshot file format.
//!
//! Layout, all little-endian:
//!
//! ```text
//! bytes 0..5    magic "SLDG1"
//! bytes 5..13   cells  (u64)
//! bytes 13..21  order  (u64)
//! bytes 21..29  wide coefficient count d (u64)
//! bytes 29..37  x_min  (f64)
//! bytes 37..45  x_max  (f64)
//! then          cells·d        f64 wide coefficients, cell-major
//! then          cells·(o−d)    f32 narrow coefficients, cell-major
//! ```
//!
//! The stores are dumped verbatim, so write→read→write is byte-identical
//! and a snapshot is a faithful witness of the in-memory state.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use sldg_core::{CoefficientGrid, Domain1D, PrecisionLayout};

pub const MAGIC: &[u8; 5] = b"SLDG1";
const HEADER_LEN: usize = 5 + 3 * 8 + 2 * 8;

pub fn snapshot_bytes(grid: &CoefficientGrid) -> Vec<u8> {
    let d = grid.layout().wide();
    let mut out = Vec::with_capacity(HEADER_LEN + grid.memory_bytes());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.cells() as u64).to_le_bytes());
    out.extend_from_slice(&(grid.order() as u64).to_le_bytes());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.extend_from_slice(&grid.domain().x_min().to_le_bytes());
    out.extend_from_slice(&grid.domain().x_max().to_le_bytes());
    for v in grid.wide_store() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in grid.narrow_store() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_snapshot(path: &Path, grid: &CoefficientGrid) -> Result<()> {
    fs::write(path, snapshot_bytes(grid))
        .with_context(|| format!("writing snapshot {}", path.display()))
}

pub fn grid_from_snapshot_bytes(bytes: &[u8]) -> Result<CoefficientGrid> {
    if bytes.len() < HEADER_LEN {
        bail!("snapshot truncated: {} bytes is shorter than the header", bytes.len());
    }
    if &bytes[..5] != MAGIC {
        bail!("not a snapshot file (bad magic)");
    }
    let u = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let f = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let cells = u(5) as usize;
    let order = u(13) as usize;
    let d = u(21) as usize;
    let x_min = f(29);
    let x_max = f(37);

    let layout = PrecisionLayout::new(order, d)?;
    let dom = Domain1D::new(x_min, x_max, cells)?;
    let n_wide = cells * d;
    let n_narrow = cells * (order - d);
    let want = HEADER_LEN + 8 * n_wide + 4 * n_narrow;
    if bytes.len() != want {
        bail!("snapshot length {} does not match header (expected {want})", bytes.len());
    }
    let mut wide = Vec::with_capacity(n_wide);
    let mut at = HEADER_LEN;
    for _ in 0..n_wide {
        wide.push(f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()));
        at += 8;
    }
    let mut narrow = Vec::with_capacity(n_narrow);
    for _ in 0..n_narrow {
        narrow.push(f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()));
        at += 4;
    }
    Ok(CoefficientGrid::from_raw_parts(dom, layout, wide, narrow)?)
}

pub fn read_snapshot(path: &Path) -> Result<CoefficientGrid> {
    let bytes =
        fs::read(path).with_context(|| format!("reading snapshot {}", path.display()))?;
    grid_from_snapshot_bytes(&bytes)
        .with_context(|| format!("parsing snapshot {}", path.display()))
}
