//! Binary model format, all integers and floats little-endian:
//!
//! ```text
//! "TDNN"              magic
//! u32                 format version
//! u32                 layer count
//! per layer:          u32 in_dim, u32 out_dim, i32 left, i32 right, u8 activation
//! u32                 normalization dim
//! f64 * dim           normalization mean
//! f64 * dim           normalization std
//! per layer:          f64 weights (row-major, out_dim x in_dim*width), f64 bias
//! ```

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::model::{Activation, Normalization, TdnnLayer, TdnnModel};
use super::Context;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"TDNN";
pub const MODEL_VERSION: u32 = 1;

// Sanity cap on any single dimension read from disk.
const MAX_DIM: u32 = 1 << 20;

pub fn write_model(model: &TdnnModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + model.param_count() * 8);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(model.layers().len() as u32).to_le_bytes());
    for layer in model.layers() {
        out.extend_from_slice(&(layer.in_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(layer.out_dim() as u32).to_le_bytes());
        out.extend_from_slice(&layer.context().left().to_le_bytes());
        out.extend_from_slice(&layer.context().right().to_le_bytes());
        out.push(layer.activation().tag());
    }
    let norm = model.normalization();
    out.extend_from_slice(&(norm.dim() as u32).to_le_bytes());
    for v in norm.mean().iter().chain(norm.std().iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in model.parameters() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn save_model(model: &TdnnModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TdnnModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&bytes)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Parse {
                offset: self.pos,
                message: format!(
                    "unexpected end of file: need {n} bytes, {} remain",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn dim(&mut self) -> Result<usize> {
        let at = self.pos;
        let v = self.u32()?;
        if v == 0 || v > MAX_DIM {
            return Err(Error::Parse {
                offset: at,
                message: format!("implausible dimension {v}"),
            });
        }
        Ok(v as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Parse {
            offset: self.pos,
            message: "length overflow".into(),
        })?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn err(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }
}

struct LayerHeader {
    in_dim: usize,
    out_dim: usize,
    context: Context,
    activation: Activation,
}

/// Parse a model from bytes. Nothing is returned unless the whole file is valid.
pub fn read_model(bytes: &[u8]) -> Result<TdnnModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MODEL_MAGIC {
        return Err(r.err(0, "bad magic, not a model file"));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::Version {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let layer_count = r.dim()?;
    let mut headers = Vec::with_capacity(layer_count.min(1024));
    for _ in 0..layer_count {
        let in_dim = r.dim()?;
        let out_dim = r.dim()?;
        let at = r.pos;
        let (left, right) = (r.i32()?, r.i32()?);
        let context = Context::new(left, right).map_err(|e| r.err(at, e.to_string()))?;
        if context.width() > MAX_DIM as usize {
            return Err(r.err(at, "context too wide"));
        }
        let at = r.pos;
        let tag = r.u8()?;
        let activation = Activation::from_tag(tag)
            .ok_or_else(|| r.err(at, format!("unknown activation tag {tag}")))?;
        headers.push(LayerHeader {
            in_dim,
            out_dim,
            context,
            activation,
        });
    }
    let norm_at = r.pos;
    let dim = r.dim()?;
    let mean = r.f64s(dim)?;
    let std = r.f64s(dim)?;
    let norm = Normalization::new(Array1::from(mean), Array1::from(std))
        .map_err(|e| r.err(norm_at, e.to_string()))?;

    let mut layers = Vec::with_capacity(headers.len());
    for h in &headers {
        let at = r.pos;
        let cols = h.in_dim * h.context.width();
        let weight = Array2::from_shape_vec((h.out_dim, cols), r.f64s(h.out_dim * cols)?)
            .map_err(|e| r.err(at, e.to_string()))?;
        let bias = Array1::from(r.f64s(h.out_dim)?);
        layers.push(
            TdnnLayer::new(h.context, weight, bias, h.activation)
                .map_err(|e| r.err(at, e.to_string()))?,
        );
    }
    if r.pos != bytes.len() {
        return Err(r.err(r.pos, format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    TdnnModel::new(layers, norm).map_err(|e| r.err(norm_at, e.to_string()))
}
