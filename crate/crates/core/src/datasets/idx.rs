//! IDX binary tensors (the MNIST distribution format).

use std::path::Path;

use super::DataError;
use crate::numerics::Matrix;
use crate::relunet::LabeledSet;

/// Unsigned-byte tensor with three dimensions.
pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
/// Unsigned-byte tensor with one dimension.
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxTensor {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxTensor {
    /// Entries per item along the first axis.
    pub fn item_len(&self) -> usize {
        self.dims[1..].iter().product()
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32, DataError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| DataError::Format(format!("file ends inside the header at byte {at}")))
}

pub fn parse_idx_bytes(bytes: &[u8]) -> Result<IdxTensor, DataError> {
    let magic = be_u32(bytes, 0)?;
    let ndim = match magic {
        IDX_IMAGES_MAGIC => 3,
        IDX_LABELS_MAGIC => 1,
        other => return Err(DataError::Format(format!("bad magic number 0x{other:08x}"))),
    };
    let dims = (0..ndim)
        .map(|k| be_u32(bytes, 4 + 4 * k).map(|d| d as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let offset = 4 + 4 * ndim;
    let expected: usize = dims.iter().product();
    let payload = &bytes[offset..];
    if payload.len() < expected {
        return Err(DataError::Format(format!(
            "truncated payload: header promises {expected} bytes, found {}",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(DataError::Format(format!(
            "{} trailing bytes after the payload",
            payload.len() - expected
        )));
    }
    Ok(IdxTensor {
        dims,
        data: payload.to_vec(),
    })
}

pub fn parse_idx(path: &Path) -> Result<IdxTensor, DataError> {
    parse_idx_bytes(&std::fs::read(path)?)
}

/// Images of two classes as a `±1` regression set.
///
/// Pixels are flattened row-major and scaled by `1/255`; `class_a` maps to `−1`, `class_b` to `+1`,
/// all other labels are dropped.
pub fn load_binary_pair(images: &Path, labels: &Path, class_a: u8, class_b: u8) -> Result<LabeledSet, DataError> {
    binary_pair_from(&parse_idx(images)?, &parse_idx(labels)?, class_a, class_b)
}

pub(crate) fn binary_pair_from(
    images: &IdxTensor,
    labels: &IdxTensor,
    class_a: u8,
    class_b: u8,
) -> Result<LabeledSet, DataError> {
    if images.dims.len() != 3 || labels.dims.len() != 1 {
        return Err(DataError::Format("expected a 3-d image tensor and a 1-d label tensor".into()));
    }
    if images.dims[0] != labels.dims[0] {
        return Err(DataError::Format(format!(
            "{} images but {} labels",
            images.dims[0], labels.dims[0]
        )));
    }
    if class_a == class_b {
        return Err(DataError::InvalidArgument("the two classes must differ".into()));
    }
    let d0 = images.item_len();
    let keep: Vec<(usize, f64)> = labels
        .data
        .iter()
        .enumerate()
        .filter_map(|(i, &l)| match l {
            l if l == class_a => Some((i, -1.0)),
            l if l == class_b => Some((i, 1.0)),
            _ => None,
        })
        .collect();
    let x = Matrix::from_fn(d0, keep.len(), |r, c| f64::from(images.data[keep[c].0 * d0 + r]) / 255.0);
    let y = Matrix::from_fn(1, keep.len(), |_, c| keep[c].1);
    Ok(LabeledSet::new(x, y)?)
}
