use super::Mask;
use crate::error::{Error, Result};

fn counts(a: &Mask, b: &Mask) -> Result<(usize, usize, usize)> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!("mask dims {:?} vs {:?}", a.dim(), b.dim())));
    }
    let (mut inter, mut na, mut nb) = (0, 0, 0);
    for (&p, &q) in a.pixels().iter().zip(b.pixels().iter()) {
        inter += (p && q) as usize;
        na += p as usize;
        nb += q as usize;
    }
    Ok((inter, na, nb))
}

/// `2|a∩b| / (|a| + |b|)`; two empty masks score 1.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    let (inter, na, nb) = counts(a, b)?;
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

/// `|a∩b| / |a∪b|`; two empty masks score 1.
pub fn jaccard(a: &Mask, b: &Mask) -> Result<f64> {
    let (inter, na, nb) = counts(a, b)?;
    let union = na + nb - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}
