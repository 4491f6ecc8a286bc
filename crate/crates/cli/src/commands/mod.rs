pub mod bmode;
pub mod entropy;
pub mod eval;
pub mod simulate;
pub mod stats;
pub mod train;

use std::path::Path;

use ndarray::Array2;
use qus_core::imageio::{write_pgm, write_png_gray};

use crate::error::{CliResult, WithPath};

/// Parses `AxL` pairs such as `100x14` (axial by lateral).
pub fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, l) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected AxL, e.g. 100x14, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?} in {s:?}: {e}"));
    Ok((num(a)?, num(l)?))
}

/// PNG when the extension says so, binary PGM otherwise.
pub fn write_gray(pixels: &Array2<u8>, path: &Path) -> CliResult<()> {
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        write_png_gray(pixels, path).at(path)
    } else {
        write_pgm(pixels, path).at(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs() {
        assert_eq!(parse_pair("100x14"), Ok((100, 14)));
        assert_eq!(parse_pair("4X2"), Ok((4, 2)));
        assert!(parse_pair("100").is_err());
        assert!(parse_pair("ax2").is_err());
    }
}
