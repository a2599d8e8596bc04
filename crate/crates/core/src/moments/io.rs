//! Moment files: JSON `{layout_version, N, c}` or packed little-endian binary.
//!
//! Binary layout: magic `ZMV1`, `u32` layout version, `u32` order `N`, `u64` count,
//! then `count` little-endian `f64` coefficients.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layout::{MomentVector, LAYOUT_VERSION};
use crate::error::{Error, Result};

pub const MOMENT_MAGIC: &[u8; 4] = b"ZMV1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentFile {
    pub layout_version: u32,
    #[serde(rename = "N")]
    pub order: usize,
    pub c: Vec<f64>,
}

impl MomentFile {
    pub fn from_vector(c: &MomentVector) -> Self {
        Self { layout_version: LAYOUT_VERSION, order: c.order(), c: c.coeffs().to_vec() }
    }

    pub fn into_vector(self) -> Result<MomentVector> {
        if self.layout_version != LAYOUT_VERSION {
            return Err(Error::Format(format!(
                "unsupported layout version {} (expected {LAYOUT_VERSION})",
                self.layout_version
            )));
        }
        MomentVector::from_coeffs(self.order, self.c)
    }
}

pub fn to_json(c: &MomentVector) -> Result<String> {
    Ok(serde_json::to_string_pretty(&MomentFile::from_vector(c))?)
}

pub fn from_json(text: &str) -> Result<MomentVector> {
    serde_json::from_str::<MomentFile>(text)?.into_vector()
}

pub fn to_bytes(c: &MomentVector) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * c.coeffs().len());
    out.extend_from_slice(MOMENT_MAGIC);
    out.extend_from_slice(&LAYOUT_VERSION.to_le_bytes());
    out.extend_from_slice(&(c.order() as u32).to_le_bytes());
    out.extend_from_slice(&(c.coeffs().len() as u64).to_le_bytes());
    for v in c.coeffs() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("truncated binary file".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub(crate) fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("length overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<MomentVector> {
    let mut rd = ByteReader::new(bytes);
    if rd.take(4)? != MOMENT_MAGIC {
        return Err(Error::Format("missing ZMV1 magic".into()));
    }
    let layout_version = rd.u32()?;
    let order = rd.u32()? as usize;
    let count = rd.u64()? as usize;
    let c = rd.f64_vec(count)?;
    rd.finish()?;
    MomentFile { layout_version, order, c }.into_vector()
}

/// Writes JSON for a `.json` extension and binary otherwise.
pub fn write_moments(path: &Path, c: &MomentVector) -> Result<()> {
    if is_json(path) {
        fs::write(path, to_json(c)?)?;
    } else {
        fs::write(path, to_bytes(c))?;
    }
    Ok(())
}

/// Reads either format, detected from the magic bytes.
pub fn read_moments(path: &Path) -> Result<MomentVector> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(MOMENT_MAGIC) {
        from_bytes(&bytes)
    } else {
        from_json(std::str::from_utf8(&bytes).map_err(|e| Error::Format(e.to_string()))?)
    }
}

pub(crate) fn is_json(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::MomentLayout;
    use proptest::prelude::*;

    fn vector(order: usize, seed: f64) -> MomentVector {
        let layout = MomentLayout::new(order);
        let mut c: Vec<f64> = (0..layout.dim()).map(|i| (i as f64 * seed).sin()).collect();
        for i in layout.zonal_positions() {
            c[layout.len() + i] = 0.0;
        }
        MomentVector::from_coeffs(order, c).unwrap()
    }

    proptest! {
        #[test]
        fn both_formats_round_trip(order in 0usize..9, seed in 0.1f64..10.0) {
            let c = vector(order, seed);
            prop_assert_eq!(&from_json(&to_json(&c).unwrap()).unwrap(), &c);
            prop_assert_eq!(&from_bytes(&to_bytes(&c)).unwrap(), &c);
        }
    }

    #[test]
    fn json_uses_documented_keys() {
        let text = to_json(&vector(1, 1.0)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["layout_version"], 1);
        assert_eq!(v["N"], 1);
        assert_eq!(v["c"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn binary_header_is_packed_little_endian() {
        let bytes = to_bytes(&vector(6, 0.3));
        assert_eq!(&bytes[..4], b"ZMV1");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &6u32.to_le_bytes());
        assert_eq!(&bytes[12..20], &100u64.to_le_bytes());
        assert_eq!(bytes.len(), 20 + 800);
    }

    #[test]
    fn corrupt_binary_is_rejected() {
        let mut bytes = to_bytes(&vector(2, 0.3));
        bytes.pop();
        assert!(from_bytes(&bytes).is_err());
        assert!(from_bytes(b"XXXX").is_err());
    }

    #[test]
    fn file_round_trip_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        let c = vector(4, 0.7);
        for name in ["m.json", "m.zmv"] {
            let path = dir.path().join(name);
            write_moments(&path, &c).unwrap();
            assert_eq!(read_moments(&path).unwrap(), c);
        }
    }
}
