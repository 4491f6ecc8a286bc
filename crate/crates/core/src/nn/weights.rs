//! QWT1 named-tensor container.
//!
//! Layout (little-endian): magic `QWT1`, u32 tensor count, then per tensor a
//! u32 name length, UTF-8 name, u32 rank, rank × u32 dims, f32 data.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{HasParams, Param};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"QWT1";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl NamedTensor {
    pub fn from_param<T: Scalar>(p: &Param<T>) -> Self {
        Self {
            name: p.name.clone(),
            shape: p.shape.clone(),
            data: p.value.iter().map(|v| v.as_f32()).collect(),
        }
    }
}

fn u32_of(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::format("weights", format!("{what} {v} exceeds u32")))
}

pub fn write_weights_to<W: Write>(mut w: W, tensors: &[NamedTensor]) -> Result<()> {
    w.write_all(WEIGHTS_MAGIC)?;
    w.write_all(&u32_of(tensors.len(), "tensor count")?.to_le_bytes())?;
    for t in tensors {
        if t.shape.iter().product::<usize>() != t.data.len() {
            return Err(Error::format("weights", format!("tensor {} data does not match its shape", t.name)));
        }
        w.write_all(&u32_of(t.name.len(), "name length")?.to_le_bytes())?;
        w.write_all(t.name.as_bytes())?;
        w.write_all(&u32_of(t.shape.len(), "rank")?.to_le_bytes())?;
        for &d in &t.shape {
            w.write_all(&u32_of(d, "dimension")?.to_le_bytes())?;
        }
        for v in &t.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::format("weights", "truncated file"))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_weights_from<R: Read>(mut r: R) -> Result<Vec<NamedTensor>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::format("weights", "file shorter than the magic"))?;
    if &magic != WEIGHTS_MAGIC {
        return Err(Error::format("weights", "bad magic, expected QWT1"));
    }
    let count = read_u32(&mut r)? as usize;
    let mut out = Vec::with_capacity(count.min(4096));
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)
            .map_err(|_| Error::format("weights", "truncated tensor name"))?;
        let name = String::from_utf8(name).map_err(|_| Error::format("weights", "tensor name is not UTF-8"))?;
        let rank = read_u32(&mut r)? as usize;
        let shape = (0..rank).map(|_| read_u32(&mut r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let mut bytes = vec![0u8; n * 4];
        r.read_exact(&mut bytes)
            .map_err(|_| Error::format("weights", format!("truncated data for {name}")))?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        out.push(NamedTensor { name, shape, data });
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::format("weights", "trailing bytes after the last tensor"));
    }
    Ok(out)
}

/// Writes every parameter of `model`, running statistics included.
pub fn export_weights<T: Scalar>(model: &impl HasParams<T>, path: impl AsRef<Path>) -> Result<()> {
    let tensors: Vec<NamedTensor> = model.params().into_iter().map(NamedTensor::from_param).collect();
    write_weights_to(BufWriter::new(File::create(path)?), &tensors)
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<Vec<NamedTensor>> {
    read_weights_from(BufReader::new(File::open(path)?))
}

/// Copies file tensors into model parameters. `mapping` pairs a tensor name
/// in the file with a parameter name in the model. All pairs are checked
/// before anything is written; on error the model is untouched. With
/// `freeze`, imported parameters are excluded from optimizer updates.
pub fn import_weights<T: Scalar>(
    model: &mut impl HasParams<T>,
    tensors: &[NamedTensor],
    mapping: &[(String, String)],
    freeze: bool,
) -> Result<()> {
    let by_name: HashMap<&str, &NamedTensor> = tensors.iter().map(|t| (t.name.as_str(), t)).collect();
    let mut params = model.params_mut();
    let index: HashMap<String, usize> = params.iter().enumerate().map(|(i, p)| (p.name.clone(), i)).collect();
    let mut offending = Vec::new();
    let mut plan = Vec::with_capacity(mapping.len());
    for (src, dst) in mapping {
        match (by_name.get(src.as_str()), index.get(dst)) {
            (Some(t), Some(&i)) if t.shape == params[i].shape => plan.push((*t, i)),
            (Some(t), Some(&i)) => offending.push(format!("{src} {:?} -> {dst} {:?}", t.shape, params[i].shape)),
            (None, _) => offending.push(format!("{src} (missing from file)")),
            (_, None) => offending.push(format!("{dst} (no such parameter)")),
        }
    }
    if !offending.is_empty() {
        return Err(Error::Import {
            names: offending,
            reason: "shape mismatch or unknown tensor".into(),
        });
    }
    for (t, i) in plan {
        let p = &mut params[i];
        for (v, &s) in p.value.iter_mut().zip(&t.data) {
            *v = T::of(s as f64);
        }
        if freeze && p.trainable {
            p.frozen = true;
        }
    }
    Ok(())
}

/// Identity mapping for every parameter of `model`.
pub fn full_mapping<T: Scalar>(model: &impl HasParams<T>) -> Vec<(String, String)> {
    model.params().iter().map(|p| (p.name.clone(), p.name.clone())).collect()
}

/// Identity mapping for the convolution weights of the first two encoder
/// levels, the blocks that take pretrained backbone weights.
pub fn first_blocks_mapping<T: Scalar>(model: &impl HasParams<T>) -> Vec<(String, String)> {
    model
        .params()
        .iter()
        .filter(|p| (p.name.starts_with("enc0.") || p.name.starts_with("enc1.")) && p.name.contains(".conv."))
        .map(|p| (p.name.clone(), p.name.clone()))
        .collect()
}
