//! Versioned binary checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "LERACNET"
//! version      u16      currently 1
//! scalar width u8       4 (f32) or 8 (f64)
//! layer count  u32
//! per layer:
//!   kind tag   u8       0 dense, 1 conv2d, 2 relu, 3 maxpool2d, 4 flatten, 5 gaussian_smooth
//!   config     u32 fields of the kind (gaussian: kernel size u32 then sigma f64)
//!   trainable layers only:
//!     weight rank u8, weight dims u32 × rank
//!     bias rank   u8, bias dims   u32 × rank
//!     weight data, bias data (raw scalars)
//! ```

use std::path::Path;

use super::{Layer, LayerKind, Network, Params};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

pub const MAGIC: &[u8; 8] = b"LERACNET";
pub const VERSION: u16 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_dims(out: &mut Vec<u8>, dims: &[usize]) {
    out.push(dims.len() as u8);
    for &d in dims {
        put_u32(out, d);
    }
}

pub fn to_bytes<T: Scalar>(net: &Network<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(T::KIND.byte_width() as u8);
    put_u32(&mut out, net.layers().len());
    for layer in net.layers() {
        match *layer.kind() {
            LayerKind::Dense { inputs, outputs } => {
                out.push(0);
                put_u32(&mut out, inputs);
                put_u32(&mut out, outputs);
            }
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel_size,
                stride,
                padding,
            } => {
                out.push(1);
                for v in [in_channels, out_channels, kernel_size, stride, padding] {
                    put_u32(&mut out, v);
                }
            }
            LayerKind::Relu => out.push(2),
            LayerKind::MaxPool2d { window, stride } => {
                out.push(3);
                put_u32(&mut out, window);
                put_u32(&mut out, stride);
            }
            LayerKind::Flatten => out.push(4),
            LayerKind::GaussianSmooth { sigma, kernel_size } => {
                out.push(5);
                put_u32(&mut out, kernel_size);
                out.extend_from_slice(&sigma.to_le_bytes());
            }
        }
        if let Some(p) = layer.params() {
            put_dims(&mut out, p.weights.dims());
            put_dims(&mut out, p.bias.dims());
            for &v in p.weights.data().iter().chain(p.bias.data()) {
                v.write_le(&mut out);
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format {
                offset: self.pos,
                message: format!("truncated checkpoint while reading {what}"),
            })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn dims(&mut self, what: &str) -> Result<Vec<usize>> {
        let rank = self.u8(what)? as usize;
        (0..rank).map(|_| self.u32(what)).collect()
    }

    fn fail(&self, offset: usize, message: String) -> Error {
        Error::Format { offset, message }
    }
}

pub fn from_bytes<T: Scalar>(bytes: &[u8]) -> Result<Network<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len(), "magic")? != MAGIC {
        return Err(r.fail(0, "bad magic, not a network checkpoint".into()));
    }
    let version = u16::from_le_bytes(r.take(2, "version")?.try_into().expect("2 bytes"));
    if version != VERSION {
        return Err(r.fail(8, format!("unsupported checkpoint version {version}")));
    }
    let width = r.u8("scalar width")? as usize;
    if width != T::KIND.byte_width() {
        return Err(r.fail(
            10,
            format!("checkpoint stores {width}-byte scalars, requested {:?}", T::KIND),
        ));
    }
    let count = r.u32("layer count")?;
    let mut layers = Vec::with_capacity(count.min(1024));
    let mut depth = 0;
    for _ in 0..count {
        let tag_at = r.pos;
        let kind = match r.u8("kind tag")? {
            0 => LayerKind::Dense {
                inputs: r.u32("dense inputs")?,
                outputs: r.u32("dense outputs")?,
            },
            1 => LayerKind::Conv2d {
                in_channels: r.u32("conv in_channels")?,
                out_channels: r.u32("conv out_channels")?,
                kernel_size: r.u32("conv kernel_size")?,
                stride: r.u32("conv stride")?,
                padding: r.u32("conv padding")?,
            },
            2 => LayerKind::Relu,
            3 => LayerKind::MaxPool2d {
                window: r.u32("pool window")?,
                stride: r.u32("pool stride")?,
            },
            4 => LayerKind::Flatten,
            5 => {
                let kernel_size = r.u32("gaussian kernel size")?;
                let sigma = f64::from_le_bytes(r.take(8, "gaussian sigma")?.try_into().expect("8 bytes"));
                LayerKind::GaussianSmooth { sigma, kernel_size }
            }
            other => return Err(r.fail(tag_at, format!("unknown layer kind tag {other}"))),
        };
        let layer = if kind.is_trainable() {
            depth += 1;
            let dims_at = r.pos;
            let wd = r.dims("weight dims")?;
            let bd = r.dims("bias dims")?;
            let wn: usize = wd.iter().product();
            let bn: usize = bd.iter().product();
            let mut read = |n: usize, what: &str| -> Result<Vec<T>> {
                let raw = r.take(n * width, what)?;
                Ok(raw.chunks_exact(width).map(T::read_le).collect())
            };
            let weights = Tensor::new(&wd, read(wn, "weights")?).map_err(|e| Error::Format {
                offset: dims_at,
                message: e.to_string(),
            })?;
            let bias = Tensor::new(&bd, read(bn, "bias")?).map_err(|e| Error::Format {
                offset: dims_at,
                message: e.to_string(),
            })?;
            Layer::with_params(kind, Some(Params { weights, bias }), Some(depth))
        } else {
            Layer::new(kind, None)
        }
        .map_err(|e| Error::Format {
            offset: tag_at,
            message: e.to_string(),
        })?;
        layers.push(layer);
    }
    if r.pos != bytes.len() {
        return Err(r.fail(r.pos, "trailing bytes after last layer".into()));
    }
    Network::from_layers(layers)
}

pub fn save<T: Scalar>(net: &Network<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_bytes(net)).map_err(|e| Error::io(path, e))
}

pub fn load<T: Scalar>(path: impl AsRef<Path>) -> Result<Network<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
