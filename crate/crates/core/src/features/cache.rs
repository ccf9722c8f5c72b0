//! Feature cache files.
//!
//! Layout (all little-endian):
//!
//! ```text
//! b"DIDF"  u32 rank  u32 dims[rank]  f32 values[product(dims)]  (row-major)
//! ```

use std::fs;
use std::io;
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"DIDF";

#[derive(Debug, Clone, PartialEq)]
pub struct CachedArray {
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

pub fn encode(dims: &[usize], values: &[f32]) -> Vec<u8> {
    assert_eq!(dims.iter().product::<usize>(), values.len(), "dims do not match data");
    let mut out = Vec::with_capacity(8 + 4 * dims.len() + 4 * values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn invalid(msg: &'static str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

pub fn decode(bytes: &[u8]) -> io::Result<CachedArray> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(invalid("not a DIDF feature file"));
    }
    let word = |at: usize| -> io::Result<u32> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| invalid("truncated DIDF header"))
    };
    let rank = word(4)? as usize;
    let dims = (0..rank)
        .map(|i| word(8 + 4 * i).map(|d| d as usize))
        .collect::<io::Result<Vec<_>>>()?;
    let body = &bytes[8 + 4 * rank..];
    let n: usize = dims.iter().product();
    if body.len() != 4 * n {
        return Err(invalid("DIDF payload size does not match dims"));
    }
    let values = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok(CachedArray { dims, values })
}

pub fn write(path: &Path, dims: &[usize], values: &[f32]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, encode(dims, values))
}

pub fn read(path: &Path) -> io::Result<CachedArray> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let bytes = encode(&[2, 3], &[0.0; 6]);
        assert_eq!(&bytes[..4], b"DIDF");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &3u32.to_le_bytes());
        assert_eq!(bytes.len(), 16 + 24);
        assert!(decode(&bytes[..20]).is_err());
        assert!(decode(b"DIDM\0\0\0\0").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(values in prop::collection::vec(-1e6f32..1e6, 0..200), split in 1usize..5) {
            let dims = if values.len() % split == 0 && !values.is_empty() {
                vec![split, values.len() / split]
            } else {
                vec![values.len()]
            };
            let back = decode(&encode(&dims, &values)).unwrap();
            prop_assert_eq!(back.dims, dims);
            prop_assert_eq!(back.values, values);
        }
    }
}
