//! IDX tensors (the MNIST distribution format).
//!
//! Layout: two zero bytes, an element type code, the number of dimensions,
//! then one big-endian `u32` per dimension, then the raw elements in
//! row-major order. Only unsigned bytes (type `0x08`) are accepted.

use alloc::vec::Vec;

use crate::error::IdxError;

const UNSIGNED_BYTE: u8 = 0x08;

/// A decoded IDX tensor of unsigned bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxTensor {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxTensor {
    /// Number of items along the first dimension.
    pub fn len(&self) -> usize {
        self.dims.first().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Elements per item (product of the trailing dimensions).
    pub fn item_size(&self) -> usize {
        self.dims.iter().skip(1).product()
    }

    /// The `i`-th item as a flat slice.
    pub fn item(&self, i: usize) -> &[u8] {
        let size = self.item_size();
        &self.data[i * size..(i + 1) * size]
    }
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxTensor, IdxError> {
    if bytes.len() < 4 || bytes[0] != 0 || bytes[1] != 0 {
        return Err(IdxError::BadMagic);
    }
    if bytes[2] != UNSIGNED_BYTE {
        return Err(IdxError::UnsupportedType(bytes[2]));
    }
    let ndims = bytes[3] as usize;
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(IdxError::Truncated {
            expected: header,
            found: bytes.len(),
        });
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or(IdxError::Truncated {
            expected: usize::MAX,
            found: bytes.len(),
        })?;
    let payload = &bytes[header..];
    if payload.len() < count {
        return Err(IdxError::Truncated {
            expected: header + count,
            found: bytes.len(),
        });
    }
    Ok(IdxTensor {
        dims,
        data: payload[..count].to_vec(),
    })
}

/// Serializes `tensor` as an unsigned-byte IDX stream.
pub fn encode_idx(tensor: &IdxTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * tensor.dims.len() + tensor.data.len());
    out.extend_from_slice(&[0, 0, UNSIGNED_BYTE, tensor.dims.len() as u8]);
    for &d in &tensor.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&tensor.data);
    out
}
