use ndarray::Array2;

use super::Mask;

/// Offsets `(dy, dx)` with `dy² + dx² <= r²`.
pub fn disk(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut offsets = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dy * dy + dx * dx <= r * r {
                offsets.push((dy, dx));
            }
        }
    }
    offsets
}

/// Dilation onto a canvas padded by `pad` on every side.
fn dilate_padded(mask: &Mask, se: &[(isize, isize)], pad: usize) -> Array2<bool> {
    let (h, w) = mask.dim();
    let mut out = Array2::from_elem((h + 2 * pad, w + 2 * pad), false);
    for ((y, x), &p) in mask.pixels().indexed_iter() {
        if !p {
            continue;
        }
        for &(dy, dx) in se {
            let yy = (y + pad) as isize + dy;
            let xx = (x + pad) as isize + dx;
            out[[yy as usize, xx as usize]] = true;
        }
    }
    out
}

/// Binary dilation with a disk; pixels outside the raster are background.
pub fn dilate(mask: &Mask, radius: usize) -> Mask {
    let pad = radius;
    let (h, w) = mask.dim();
    let canvas = dilate_padded(mask, &disk(radius), pad);
    Mask::new(Array2::from_shape_fn((h, w), |(y, x)| canvas[[y + pad, x + pad]]))
}

fn erode_canvas(canvas: &Array2<bool>, se: &[(isize, isize)], pad: usize, dim: (usize, usize)) -> Mask {
    let (ch, cw) = canvas.dim();
    Mask::new(Array2::from_shape_fn(dim, |(y, x)| {
        se.iter().all(|&(dy, dx)| {
            let yy = (y + pad) as isize + dy;
            let xx = (x + pad) as isize + dx;
            yy >= 0 && xx >= 0 && (yy as usize) < ch && (xx as usize) < cw && canvas[[yy as usize, xx as usize]]
        })
    }))
}

/// Binary erosion with a disk; pixels outside the raster are background.
pub fn erode(mask: &Mask, radius: usize) -> Mask {
    erode_canvas(&mask.pixels().to_owned(), &disk(radius), 0, mask.dim())
}

/// Closing (dilation then erosion) with a disk of the given radius.
///
/// The dilation is carried out on a canvas padded by `radius`, so foreground
/// that spreads past the border still supports the erosion. The result is
/// the closing of the mask viewed as a set in the unbounded plane, cropped
/// back to the raster.
pub fn morph_close(mask: &Mask, radius: usize) -> Mask {
    if radius == 0 {
        return mask.clone();
    }
    let se = disk(radius);
    let canvas = dilate_padded(mask, &se, radius);
    erode_canvas(&canvas, &se, radius, mask.dim())
}
