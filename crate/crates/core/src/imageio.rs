//! PGM (P5) and PNG raster files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::{GrayImage, ImageFormat, RgbImage};
use ndarray::Array2;

use crate::colormap::VIRIDIS;
use crate::error::{Error, Result};
use crate::raster::normalize_min_max;
use crate::scalar::Scalar;

pub fn write_pgm_to<W: Write>(pixels: &Array2<u8>, mut w: W) -> Result<()> {
    let (h, wd) = pixels.dim();
    write!(w, "P5\n{wd} {h}\n255\n")?;
    let data: Vec<u8> = pixels.iter().copied().collect();
    w.write_all(&data)?;
    w.flush()?;
    Ok(())
}

pub fn write_pgm(pixels: &Array2<u8>, path: impl AsRef<Path>) -> Result<()> {
    write_pgm_to(pixels, BufWriter::new(File::create(path)?))
}

fn next_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = String::new();
    loop {
        let mut byte = [0u8; 1];
        if r.read(&mut byte)? == 0 {
            return Err(Error::format("PGM", "truncated header"));
        }
        let c = byte[0];
        if c == b'#' && tok.is_empty() {
            let mut sink = Vec::new();
            r.read_until(b'\n', &mut sink)?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            return Ok(tok);
        }
        tok.push(c as char);
    }
}

pub fn read_pgm_from<R: Read>(r: R) -> Result<Array2<u8>> {
    let mut r = BufReader::new(r);
    if next_token(&mut r)? != "P5" {
        return Err(Error::format("PGM", "only binary P5 images are supported"));
    }
    let mut num = |what: &str| -> Result<usize> {
        next_token(&mut r)?
            .parse()
            .map_err(|_| Error::format("PGM", format!("bad {what}")))
    };
    let w = num("width")?;
    let h = num("height")?;
    let maxval = num("maxval")?;
    if maxval != 255 {
        return Err(Error::format("PGM", format!("unsupported maxval {maxval}")));
    }
    let mut data = vec![0u8; w * h];
    r.read_exact(&mut data)
        .map_err(|_| Error::format("PGM", "truncated pixel data"))?;
    Array2::from_shape_vec((h, w), data).map_err(|e| Error::format("PGM", e.to_string()))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Array2<u8>> {
    read_pgm_from(File::open(path)?)
}

pub fn write_png_gray(pixels: &Array2<u8>, path: impl AsRef<Path>) -> Result<()> {
    let (h, w) = pixels.dim();
    let img = GrayImage::from_raw(w as u32, h as u32, pixels.iter().copied().collect())
        .ok_or_else(|| Error::Image("pixel buffer size mismatch".into()))?;
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))
}

/// Min-max normalizes a real raster to 8 bits.
pub fn to_gray8<T: Scalar>(raster: &Array2<T>) -> Array2<u8> {
    normalize_min_max(raster).mapv(|v| (v.as_f64() * 255.0).round().clamp(0.0, 255.0) as u8)
}

/// Writes a real raster as PNG after min-max normalization, optionally
/// through the viridis table.
pub fn write_png_scaled<T: Scalar>(raster: &Array2<T>, colormap: bool, path: impl AsRef<Path>) -> Result<()> {
    let gray = to_gray8(raster);
    if !colormap {
        return write_png_gray(&gray, path);
    }
    let (h, w) = gray.dim();
    let rgb: Vec<u8> = gray.iter().flat_map(|&g| VIRIDIS[g as usize]).collect();
    let img = RgbImage::from_raw(w as u32, h as u32, rgb)
        .ok_or_else(|| Error::Image("pixel buffer size mismatch".into()))?;
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn pgm_round_trip_with_comment() {
        let px = arr2(&[[0u8, 255, 7], [1, 2, 3]]);
        let mut buf = Vec::new();
        write_pgm_to(&px, &mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(read_pgm_from(buf.as_slice()).unwrap(), px);

        let mut commented = b"P5\n# made by hand\n3 2\n255\n".to_vec();
        commented.extend_from_slice(&[0, 255, 7, 1, 2, 3]);
        assert_eq!(read_pgm_from(commented.as_slice()).unwrap(), px);
    }

    #[test]
    fn pgm_rejects_ascii_and_truncation() {
        assert!(read_pgm_from(&b"P2\n1 1\n255\n0"[..]).is_err());
        assert!(read_pgm_from(&b"P5\n2 2\n255\n\x01"[..]).is_err());
    }

    #[test]
    fn gray8_spans_full_range() {
        let g = to_gray8(&arr2(&[[2.0f64, 3.0, 4.0]]));
        assert_eq!(g, arr2(&[[0u8, 128, 255]]));
    }
}
