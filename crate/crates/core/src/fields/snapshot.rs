//! Bit-exact binary snapshots for gridded fields.
//!
//! Layout (little-endian): magic `YUD2`, u32 version, u32 n, f64 half-width,
//! u8 component count, then `ncomp * n * n` f64 values row-major. Version 1
//! carries scalar (1) or vector (2) fields; version 2 carries third-order
//! kernel tables (8 components).

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Grid2D, ScalarField2D, VectorField2D};

const MAGIC: [u8; 4] = *b"YUD2";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported snapshot version {found}")]
    VersionMismatch { found: u32 },
    #[error("truncated snapshot payload")]
    Truncated,
    #[error("component count {found} invalid for version {version}")]
    BadComponentCount { version: u32, found: u8 },
    #[error("snapshot holds {found} components, expected {expected}")]
    ComponentMismatch { expected: u8, found: u8 },
    #[error("snapshot grid is invalid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A decoded snapshot before interpretation as a concrete field type.
#[derive(Debug, Clone)]
pub struct RawSnapshot {
    pub version: u32,
    pub grid: Grid2D,
    /// One row-major plane per component.
    pub components: Vec<Vec<f64>>,
}

fn allowed_ncomp(version: u32) -> &'static [u8] {
    match version {
        1 => &[1, 2],
        2 => &[8],
        _ => &[],
    }
}

pub fn write_raw_snapshot(
    path: &Path,
    version: u32,
    grid: &Grid2D,
    components: &[&[f64]],
) -> Result<(), SnapshotError> {
    let ncomp = components.len() as u8;
    if !allowed_ncomp(version).contains(&ncomp) {
        return Err(SnapshotError::BadComponentCount { version, found: ncomp });
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&version.to_le_bytes())?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    w.write_all(&grid.half_width().to_le_bytes())?;
    w.write_all(&[ncomp])?;
    for plane in components {
        assert_eq!(plane.len(), grid.len(), "component length mismatch");
        for v in plane.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact_or_truncated(r: &mut impl Read, buf: &mut [u8]) -> Result<(), SnapshotError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            SnapshotError::Truncated
        } else {
            SnapshotError::Io(e)
        }
    })
}

pub fn read_raw_snapshot(path: &Path) -> Result<RawSnapshot, SnapshotError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact_or_truncated(&mut r, &mut magic)?;
    if magic != MAGIC {
        return Err(SnapshotError::BadMagic(magic));
    }
    let mut b4 = [0u8; 4];
    read_exact_or_truncated(&mut r, &mut b4)?;
    let version = u32::from_le_bytes(b4);
    if allowed_ncomp(version).is_empty() {
        return Err(SnapshotError::VersionMismatch { found: version });
    }
    read_exact_or_truncated(&mut r, &mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    read_exact_or_truncated(&mut r, &mut b8)?;
    let half_width = f64::from_le_bytes(b8);
    let mut b1 = [0u8; 1];
    read_exact_or_truncated(&mut r, &mut b1)?;
    let ncomp = b1[0];
    if !allowed_ncomp(version).contains(&ncomp) {
        return Err(SnapshotError::BadComponentCount { version, found: ncomp });
    }
    let grid = Grid2D::new(n, half_width).map_err(|e| SnapshotError::InvalidGrid(e.to_string()))?;

    let mut components = Vec::with_capacity(ncomp as usize);
    for _ in 0..ncomp {
        let mut plane = vec![0.0f64; grid.len()];
        for v in plane.iter_mut() {
            read_exact_or_truncated(&mut r, &mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
        components.push(plane);
    }
    Ok(RawSnapshot { version, grid, components })
}

impl ScalarField2D {
    pub fn write_snapshot(&self, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
        write_raw_snapshot(path.as_ref(), 1, self.grid(), &[self.data()])
    }

    pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Self, SnapshotError> {
        let raw = read_raw_snapshot(path.as_ref())?;
        if raw.components.len() != 1 {
            return Err(SnapshotError::ComponentMismatch {
                expected: 1,
                found: raw.components.len() as u8,
            });
        }
        let mut comps = raw.components;
        Ok(ScalarField2D::from_data(raw.grid, comps.pop().unwrap()))
    }
}

impl VectorField2D {
    pub fn write_snapshot(&self, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
        write_raw_snapshot(path.as_ref(), 1, self.grid(), &[self.u1(), self.u2()])
    }

    pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Self, SnapshotError> {
        let raw = read_raw_snapshot(path.as_ref())?;
        if raw.components.len() != 2 {
            return Err(SnapshotError::ComponentMismatch {
                expected: 2,
                found: raw.components.len() as u8,
            });
        }
        let mut comps = raw.components;
        let u2 = comps.pop().unwrap();
        let u1 = comps.pop().unwrap();
        Ok(VectorField2D::from_components(
            ScalarField2D::from_data(raw.grid, u1),
            ScalarField2D::from_data(raw.grid, u2),
        )
        .expect("components share the grid by construction"))
    }
}
