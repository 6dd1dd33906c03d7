//! IDX files: a 4-byte magic (`0x00 0x00 <type> <rank>`), `rank` big-endian
//! u32 dimensions, then the payload. Only the unsigned-byte type (0x08) is
//! supported.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const UBYTE: u8 = 0x08;

/// Raw contents of an unsigned-byte IDX file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

fn format(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset,
        message: message.into(),
    }
}

pub fn read_idx(bytes: &[u8]) -> Result<IdxArray> {
    if bytes.len() < 4 {
        return Err(format(bytes.len(), "file shorter than the 4-byte magic number"));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(format(
            0,
            format!(
                "magic must start with two zero bytes, found {:02x} {:02x}",
                bytes[0], bytes[1]
            ),
        ));
    }
    if bytes[2] != UBYTE {
        return Err(format(
            2,
            format!("unsupported element type 0x{:02x} (only unsigned byte 0x08)", bytes[2]),
        ));
    }
    let rank = bytes[3] as usize;
    if rank == 0 {
        return Err(format(3, "rank must be at least 1"));
    }
    let header = 4 + 4 * rank;
    if bytes.len() < header {
        return Err(format(
            bytes.len(),
            format!("header declares {rank} dimensions but the file ends early"),
        ));
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")) as usize)
        .collect();
    if let Some(i) = dims.iter().position(|&d| d == 0) {
        return Err(format(4 + 4 * i, "zero-length dimension"));
    }
    let expected: usize = dims.iter().product();
    let payload = &bytes[header..];
    if payload.len() != expected {
        return Err(format(
            header,
            format!(
                "payload holds {} bytes, dimensions {dims:?} require {expected}",
                payload.len()
            ),
        ));
    }
    Ok(IdxArray {
        dims,
        data: payload.to_vec(),
    })
}

pub fn write_idx(array: &IdxArray) -> Vec<u8> {
    let mut out = vec![0, 0, UBYTE, array.dims.len() as u8];
    for &d in &array.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&array.data);
    out
}

fn read_file(path: &Path) -> Result<IdxArray> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_idx(&bytes)
}

/// Loads an image file (N×H×W or N×C×H×W) and its label file (N). Pixels
/// are scaled to [0, 1]; N×H×W images gain a unit channel axis. With
/// `classes` unset the class count is one past the largest label.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    classes: Option<usize>,
) -> Result<Dataset> {
    let images = read_file(images_path.as_ref())?;
    let labels = read_file(labels_path.as_ref())?;
    if labels.dims.len() != 1 {
        return Err(format(
            3,
            format!("label file must be rank 1, found rank {}", labels.dims.len()),
        ));
    }
    let n = images.dims[0];
    if labels.dims[0] != n {
        return Err(Error::shape("idx labels", &labels.dims, &images.dims));
    }
    let dims = match images.dims.as_slice() {
        [n, h, w] => vec![*n, 1, *h, *w],
        [n, c, h, w] => vec![*n, *c, *h, *w],
        [n, d] => vec![*n, *d],
        other => return Err(format(3, format!("unsupported image rank {}", other.len()))),
    };
    let label_values: Vec<usize> = labels.data.iter().map(|&b| b as usize).collect();
    let classes = classes.unwrap_or_else(|| label_values.iter().max().map_or(1, |m| m + 1));
    let pixels = images.data.iter().map(|&b| b as f64 / 255.0).collect();
    Dataset::new(Tensor::new(&dims, pixels)?, label_values, classes)
}
