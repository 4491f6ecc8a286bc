//! `QEM1` entropy map file.
//!
//! Layout (little-endian): magic `QEM1`, u32 h, u32 w, u32 axial_samples,
//! u32 lateral_lines, u32 stride_axial, u32 stride_lateral, u32 n_bins,
//! f64 origin axial, f64 origin lateral, then `h·w` f32 values row-major.
//! Rows index scanline positions, columns axial positions.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{EntropyMap, WindowSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const EM_MAGIC: &[u8; 4] = b"QEM1";

pub fn write_entropy_map_to<T: Scalar, W: Write>(map: &EntropyMap<T>, mut w: W) -> Result<()> {
    let (h, wd) = map.values.dim();
    w.write_all(EM_MAGIC)?;
    let win = &map.window;
    for v in [
        h,
        wd,
        win.axial_samples,
        win.lateral_lines,
        win.stride_axial,
        win.stride_lateral,
        win.n_bins,
    ] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    w.write_all(&map.origin_offset.0.to_le_bytes())?;
    w.write_all(&map.origin_offset.1.to_le_bytes())?;
    for v in map.values.iter() {
        w.write_all(&v.as_f32().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_entropy_map<T: Scalar>(map: &EntropyMap<T>, path: impl AsRef<Path>) -> Result<()> {
    write_entropy_map_to(map, BufWriter::new(File::create(path)?))
}

pub fn read_entropy_map_from<T: Scalar, R: Read>(mut r: R) -> Result<EntropyMap<T>> {
    let mut header = [0u8; 4 + 7 * 4 + 16];
    r.read_exact(&mut header)
        .map_err(|_| Error::format("entropy map", "truncated header"))?;
    if &header[..4] != EM_MAGIC {
        return Err(Error::format("entropy map", "bad magic"));
    }
    let u = |i: usize| u32::from_le_bytes(header[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let f = |at: usize| f64::from_le_bytes(header[at..at + 8].try_into().unwrap());
    let (h, w) = (u(0), u(1));
    let window = WindowSpec {
        axial_samples: u(2),
        lateral_lines: u(3),
        stride_axial: u(4),
        stride_lateral: u(5),
        n_bins: u(6),
    };
    let origin_offset = (f(32), f(40));
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    if raw.len() != h * w * 4 {
        return Err(Error::format(
            "entropy map",
            format!("expected {} value bytes, found {}", h * w * 4, raw.len()),
        ));
    }
    let values: Vec<T> = raw
        .chunks_exact(4)
        .map(|b| T::of(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64))
        .collect();
    Ok(EntropyMap {
        values: Array2::from_shape_vec((h, w), values).map_err(|e| Error::format("entropy map", e.to_string()))?,
        window,
        origin_offset,
    })
}

pub fn read_entropy_map<T: Scalar>(path: impl AsRef<Path>) -> Result<EntropyMap<T>> {
    read_entropy_map_from(BufReader::new(File::open(path)?))
}
