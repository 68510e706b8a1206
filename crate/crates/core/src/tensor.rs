//! Standalone tensor files (`.tns`): density fields, predictions and any
//! other `channels x nely x nelx` block outside a dataset directory.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! magic "STNS" | version | channels | nely | nelx | payload | crc32
//! ```
//!
//! The payload is `channels * nely * nelx` little-endian `f32` values,
//! channel-major then row-major (row 0 at the top). The trailing CRC-32
//! covers the payload bytes only.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fea::DensityField;

pub const TENSOR_MAGIC: &[u8; 4] = b"STNS";
pub const TENSOR_VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub channels: usize,
    pub nely: usize,
    pub nelx: usize,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(channels: usize, nely: usize, nelx: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * nely * nelx {
            return Err(Error::Shape {
                expected: format!("{channels}x{nely}x{nelx}"),
                actual: format!("{} values", data.len()),
            });
        }
        Ok(Self {
            channels,
            nely,
            nelx,
            data,
        })
    }

    pub fn from_field(field: &DensityField) -> Self {
        Self {
            channels: 1,
            nely: field.nely(),
            nelx: field.nelx(),
            data: field.values().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.nely * self.nelx;
        &self.data[c * n..(c + 1) * n]
    }

    /// Channel `c` as a density field (values must lie in `[0, 1]`).
    pub fn field(&self, c: usize) -> Result<DensityField> {
        if c >= self.channels {
            return Err(Error::param(format!(
                "channel {c} requested from a {}-channel tensor",
                self.channels
            )));
        }
        DensityField::from_f32(self.nelx, self.nely, self.channel(c))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len() + 4);
        out.extend_from_slice(TENSOR_MAGIC);
        for v in [
            TENSOR_VERSION,
            self.channels as u32,
            self.nely as u32,
            self.nelx as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let payload = f32_to_le_bytes(&self.data);
        let crc = crc32fast::hash(&payload);
        out.extend_from_slice(&payload);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::format(None, m);
        if bytes.len() < HEADER_LEN + 4 || &bytes[..4] != TENSOR_MAGIC {
            return Err(bad("not a tensor file (bad magic or too short)".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let version = word(0);
        if version != TENSOR_VERSION {
            return Err(bad(format!(
                "tensor version {version}, expected {TENSOR_VERSION}"
            )));
        }
        let (channels, nely, nelx) = (word(1) as usize, word(2) as usize, word(3) as usize);
        let count = channels
            .checked_mul(nely)
            .and_then(|v| v.checked_mul(nelx))
            .ok_or_else(|| bad("tensor dimensions overflow".into()))?;
        let expected = HEADER_LEN + 4 * count + 4;
        if bytes.len() != expected {
            return Err(bad(format!(
                "tensor is {} bytes, header implies {expected}",
                bytes.len()
            )));
        }
        let payload = &bytes[HEADER_LEN..expected - 4];
        let stored = u32::from_le_bytes(bytes[expected - 4..].try_into().unwrap());
        if crc32fast::hash(payload) != stored {
            return Err(bad("tensor checksum mismatch".into()));
        }
        Tensor::new(channels, nely, nelx, f32_from_le_bytes(payload))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub(crate) fn f32_to_le_bytes(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub(crate) fn f32_from_le_bytes(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect()
}
