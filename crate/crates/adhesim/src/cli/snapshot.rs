//! Binary state snapshots.
//!
//! Layout: magic `ADH1`, u8 dimension, one little-endian u32 per axis
//! (cells along that axis), f64 LE spacing `h`, f64 LE time `t`, then `u`
//! and `v` as f64 LE row-major over the full cell lattice with exterior
//! slots written as NaN. Reads are integrity-checked against magic and
//! exact length.

use std::io::{Read, Write};
use std::path::Path;

use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::geometry::GridGeometry;

pub const MAGIC: &[u8; 4] = b"ADH1";

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub dim: u8,
    pub shape: Vec<u32>,
    pub h: f64,
    pub t: f64,
}

/// Serialise a state; bit-exact round trip through [`read_snapshot`].
pub fn write_snapshot(state: &State, geom: &GridGeometry, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(32 + 16 * geom.n_cells());
    buf.extend_from_slice(MAGIC);
    buf.push(geom.dim as u8);
    for axis in 0..geom.dim {
        buf.extend_from_slice(&(geom.shape[axis] as u32).to_le_bytes());
    }
    buf.extend_from_slice(&geom.h.to_le_bytes());
    buf.extend_from_slice(&state.t.to_le_bytes());
    for fieldvals in [&state.u, &state.v] {
        for cell in 0..geom.n_cells() {
            let x = if geom.is_active(cell) {
                fieldvals[cell]
            } else {
                f64::NAN
            };
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Read and integrity-check a snapshot. Exterior slots come back as NaN.
pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, Vec<f64>, Vec<f64>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 4 || &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic (expected ADH1)".into()));
    }
    let mut pos = 4usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > bytes.len() {
            return Err(Error::Format("truncated snapshot".into()));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    let dim = take(&mut pos, 1)?[0];
    if !(1..=2).contains(&dim) {
        return Err(Error::Format(format!("dimension {dim} not supported")));
    }
    let mut shape = Vec::new();
    for _ in 0..dim {
        let b: [u8; 4] = take(&mut pos, 4)?.try_into().unwrap();
        shape.push(u32::from_le_bytes(b));
    }
    let h = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let t = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let n_cells: usize = shape.iter().map(|&s| s as usize).product();
    if n_cells == 0 {
        return Err(Error::Format("empty shape".into()));
    }
    let expected = pos + 2 * n_cells * 8;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "length mismatch: file has {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let read_field = |pos: &mut usize| -> Result<Vec<f64>> {
        let mut f = Vec::with_capacity(n_cells);
        for _ in 0..n_cells {
            let b: [u8; 8] = take(pos, 8)?.try_into().unwrap();
            f.push(f64::from_le_bytes(b));
        }
        Ok(f)
    };
    let u = read_field(&mut pos)?;
    let v = read_field(&mut pos)?;
    Ok((SnapshotHeader { dim, shape, h, t }, u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_geometry, DomainKind, GeometrySpec};

    fn disc_state() -> (GridGeometry, State) {
        let geom = build_geometry(&GeometrySpec {
            kind: DomainKind::Disc,
            extents: vec![1.0],
            h: 0.1,
        })
        .unwrap();
        let mut state = State::zeros(&geom);
        for (i, &c) in geom.active_cells().iter().enumerate() {
            state.u[c] = i as f64 * 0.01;
            state.v[c] = 1.0 / (1.0 + i as f64);
        }
        state.t = 0.375;
        (geom, state)
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let (geom, state) = disc_state();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.adh1");
        write_snapshot(&state, &geom, &path).unwrap();
        let (hdr, u, v) = read_snapshot(&path).unwrap();
        assert_eq!(hdr.t.to_bits(), state.t.to_bits());
        assert_eq!(hdr.h, geom.h);
        assert_eq!(hdr.shape, vec![geom.shape[0] as u32, geom.shape[1] as u32]);
        for cell in 0..geom.n_cells() {
            if geom.is_active(cell) {
                assert_eq!(u[cell].to_bits(), state.u[cell].to_bits());
                assert_eq!(v[cell].to_bits(), state.v[cell].to_bits());
            } else {
                assert!(u[cell].is_nan() && v[cell].is_nan());
            }
        }
        // writing again produces identical bytes
        let path2 = dir.path().join("snap2.adh1");
        write_snapshot(&state, &geom, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn truncated_and_corrupt_files_rejected() {
        let (geom, state) = disc_state();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.adh1");
        write_snapshot(&state, &geom, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        let trunc = dir.path().join("trunc.adh1");
        std::fs::write(&trunc, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(read_snapshot(&trunc), Err(Error::Format(_))));

        let mut bad = bytes.clone();
        bad[0] = b'X';
        let badp = dir.path().join("bad.adh1");
        std::fs::write(&badp, &bad).unwrap();
        assert!(matches!(read_snapshot(&badp), Err(Error::Format(_))));

        let mut long = bytes;
        long.push(0);
        let longp = dir.path().join("long.adh1");
        std::fs::write(&longp, &long).unwrap();
        assert!(matches!(read_snapshot(&longp), Err(Error::Format(_))));
    }
}
