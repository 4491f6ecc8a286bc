//! `QRF1` little-endian RF container.
//!
//! Layout: magic `QRF1`, u32 n_lines, u32 n_axial, f64 fs, f64 f0,
//! f64 sound_speed, u8 dtype (0 = i16, 1 = f32), then scanline-major samples.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::RfFrame;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const RF_MAGIC: &[u8; 4] = b"QRF1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleType {
    I16,
    F32,
}

impl SampleType {
    fn tag(self) -> u8 {
        match self {
            SampleType::I16 => 0,
            SampleType::F32 => 1,
        }
    }
}

pub fn write_rf_to<T: Scalar, W: Write>(frame: &RfFrame<T>, dtype: SampleType, mut w: W) -> Result<()> {
    w.write_all(RF_MAGIC)?;
    w.write_all(&(frame.n_lines() as u32).to_le_bytes())?;
    w.write_all(&(frame.n_axial() as u32).to_le_bytes())?;
    w.write_all(&frame.fs.to_le_bytes())?;
    w.write_all(&frame.f0.to_le_bytes())?;
    w.write_all(&frame.sound_speed.to_le_bytes())?;
    w.write_all(&[dtype.tag()])?;
    for &v in frame.samples().iter() {
        match dtype {
            SampleType::F32 => w.write_all(&v.as_f32().to_le_bytes())?,
            SampleType::I16 => {
                let q = v.as_f64().round();
                if !(i16::MIN as f64..=i16::MAX as f64).contains(&q) {
                    return Err(Error::InvalidInput(format!(
                        "sample {q} does not fit in int16"
                    )));
                }
                w.write_all(&(q as i16).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_rf<T: Scalar>(frame: &RfFrame<T>, dtype: SampleType, path: impl AsRef<Path>) -> Result<()> {
    write_rf_to(frame, dtype, BufWriter::new(File::create(path)?))
}

fn read_exact<const N: usize, R: Read>(r: &mut R, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|_| Error::format("RF", format!("truncated while reading {what}")))?;
    Ok(buf)
}

pub fn read_rf_from<T: Scalar, R: Read>(mut r: R) -> Result<RfFrame<T>> {
    let magic = read_exact::<4, _>(&mut r, "magic")?;
    if &magic != RF_MAGIC {
        return Err(Error::format("RF", format!("bad magic {magic:?}")));
    }
    let n_lines = u32::from_le_bytes(read_exact(&mut r, "n_lines")?) as usize;
    let n_axial = u32::from_le_bytes(read_exact(&mut r, "n_axial")?) as usize;
    let fs = f64::from_le_bytes(read_exact(&mut r, "fs")?);
    let f0 = f64::from_le_bytes(read_exact(&mut r, "f0")?);
    let c = f64::from_le_bytes(read_exact(&mut r, "sound_speed")?);
    let [tag] = read_exact::<1, _>(&mut r, "dtype")?;
    let width = match tag {
        0 => 2,
        1 => 4,
        t => return Err(Error::format("RF", format!("unknown dtype tag {t}"))),
    };
    let count = n_lines
        .checked_mul(n_axial)
        .ok_or_else(|| Error::format("RF", "dimension overflow"))?;
    let mut raw = Vec::new();
    r.take((count * width) as u64 + 1).read_to_end(&mut raw)?;
    if raw.len() != count * width {
        return Err(Error::format(
            "RF",
            format!("expected {} sample bytes, found {}", count * width, raw.len()),
        ));
    }
    let samples: Vec<T> = match tag {
        0 => raw
            .chunks_exact(2)
            .map(|b| T::of(i16::from_le_bytes([b[0], b[1]]) as f64))
            .collect(),
        _ => raw
            .chunks_exact(4)
            .map(|b| T::of(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64))
            .collect(),
    };
    let samples = Array2::from_shape_vec((n_lines, n_axial), samples)
        .map_err(|e| Error::format("RF", e.to_string()))?;
    RfFrame::new(samples, fs, f0)?.with_sound_speed(c)
}

pub fn read_rf<T: Scalar>(path: impl AsRef<Path>) -> Result<RfFrame<T>> {
    read_rf_from(BufReader::new(File::open(path)?))
}
