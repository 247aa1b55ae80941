//! `cloud.spcd`: a 13-byte little-endian header (`"SPCD"`, version `u8`,
//! width `u32`, height `u32`) followed by `height * width * 3` `f32`
//! camera-space coordinates in row-major pixel order. Invalid pixels are
//! three NaNs.

use std::path::Path;

use super::DatasetError;
use crate::linalg::Vec3;
use crate::scanner::StructuredCloud;

pub const MAGIC: &[u8; 4] = b"SPCD";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 13;

/// Serializes a cloud. NaN coordinates are written as the canonical quiet
/// NaN so invalid pixels have one byte pattern.
pub fn encode(cloud: &StructuredCloud<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + cloud.points.len() * 12);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&cloud.width.to_le_bytes());
    out.extend_from_slice(&cloud.height.to_le_bytes());
    for p in &cloud.points {
        for c in [p.x, p.y, p.z] {
            let c = if c.is_nan() { f32::NAN } else { c };
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

/// Parses a cloud; `path` only labels errors.
pub fn decode(bytes: &[u8], path: &Path) -> Result<StructuredCloud<f32>, DatasetError> {
    let path = path.display().to_string();
    if bytes.len() < HEADER_LEN {
        return Err(DatasetError::Truncated {
            path,
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(DatasetError::BadMagic {
            path,
            found: bytes[..4].try_into().expect("four bytes"),
        });
    }
    if bytes[4] != VERSION {
        return Err(DatasetError::UnsupportedVersion { path, version: bytes[4] });
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("four bytes"));
    let (width, height) = (word(5), word(9));
    let expected = HEADER_LEN as u64 + width as u64 * height as u64 * 12;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(DatasetError::Truncated { path, expected, actual });
    }
    if actual > expected {
        return Err(DatasetError::DimensionMismatch {
            path,
            width,
            height,
            payload_bytes: actual - HEADER_LEN as u64,
        });
    }
    let points = bytes[HEADER_LEN..]
        .chunks_exact(12)
        .map(|c| {
            let f = |k: usize| f32::from_le_bytes(c[k..k + 4].try_into().expect("four bytes"));
            Vec3::new(f(0), f(4), f(8))
        })
        .collect();
    Ok(StructuredCloud { width, height, points })
}
