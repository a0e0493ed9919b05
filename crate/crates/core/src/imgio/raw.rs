//! Headerless 16-bit rasters, optionally described by a JSON sidecar.
//!
//! A sidecar for `scan.raw` lives at `scan.json`:
//!
//! ```json
//! {"width": 128, "height": 128, "endianness": "little"}
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgio::{GrayImage, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Endianness {
    #[default]
    Little,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGeometry {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub endianness: Endianness,
}

pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

pub fn read_sidecar(raw: &Path) -> Result<Option<RawGeometry>> {
    let path = sidecar_path(raw);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(Some(serde_json::from_str(&text)?))
}

fn decode(bytes: &[u8], endianness: Endianness) -> impl Iterator<Item = u16> + '_ {
    bytes.chunks_exact(2).map(move |c| match endianness {
        Endianness::Little => u16::from_le_bytes([c[0], c[1]]),
        Endianness::Big => u16::from_be_bytes([c[0], c[1]]),
    })
}

fn frame_bytes(width: usize, height: usize) -> Result<usize> {
    width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(2))
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("bad raw geometry {width}x{height}")))
}

/// Decodes exactly one `width x height` frame, row-major.
pub fn read_raw16(path: impl AsRef<Path>, width: usize, height: usize, endianness: Endianness) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = frame_bytes(width, height)?;
    if bytes.len() != expected {
        return Err(Error::Parse(format!(
            "{}: expected {expected} bytes for {width}x{height}, found {}",
            path.display(),
            bytes.len()
        )));
    }
    GrayImage::new(width, height, decode(&bytes, endianness).collect())
}

/// Decodes a concatenation of equally sized frames.
pub fn read_raw16_series(path: impl AsRef<Path>, width: usize, height: usize, endianness: Endianness) -> Result<Series> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let frame = frame_bytes(width, height)?;
    if bytes.is_empty() || bytes.len() % frame != 0 {
        return Err(Error::Parse(format!(
            "{}: {} bytes is not a whole number of {width}x{height} frames",
            path.display(),
            bytes.len()
        )));
    }
    let frames = bytes
        .chunks_exact(frame)
        .map(|chunk| GrayImage::new(width, height, decode(chunk, endianness).collect()))
        .collect::<Result<Vec<_>>>()?;
    Series::new(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(bytes: &[u8]) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), bytes).unwrap();
        f
    }

    #[test]
    fn little_endian_byte_arithmetic() {
        let f = write(&[0x01, 0x00, 0x00, 0x01, 0x02, 0x00, 0x00, 0x02]);
        let img = read_raw16(f.path(), 2, 2, Endianness::Little).unwrap();
        assert_eq!(img.pixels(), &[1, 256, 2, 512]);
        let img = read_raw16(f.path(), 2, 2, Endianness::Big).unwrap();
        assert_eq!(img.pixels(), &[256, 1, 512, 2]);
    }

    #[test]
    fn length_must_match() {
        let f = write(&[0; 7]);
        assert!(matches!(read_raw16(f.path(), 2, 2, Endianness::Little), Err(Error::Parse(_))));
        assert!(read_raw16_series(f.path(), 2, 2, Endianness::Little).is_err());
    }

    #[test]
    fn zero_file_zero_image() {
        let f = write(&[0; 32]);
        let img = read_raw16(f.path(), 4, 4, Endianness::Big).unwrap();
        assert!(img.pixels().iter().all(|&v| v == 0));
    }

    #[test]
    fn series_splits_frames() {
        let bytes: Vec<u8> = (0u16..12).flat_map(|v| v.to_le_bytes()).collect();
        let f = write(&bytes);
        let s = read_raw16_series(f.path(), 2, 2, Endianness::Little).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.select_timepoint(3).unwrap().pixels(), &[8, 9, 10, 11]);
    }

    #[test]
    fn sidecar_is_found_next_to_raster() {
        let dir = tempfile::tempdir().unwrap();
        let raw = dir.path().join("scan.raw");
        fs::write(&raw, [0u8; 8]).unwrap();
        assert_eq!(read_sidecar(&raw).unwrap(), None);
        fs::write(dir.path().join("scan.json"), r#"{"width":2,"height":2,"endianness":"big"}"#).unwrap();
        let geo = read_sidecar(&raw).unwrap().unwrap();
        assert_eq!(geo, RawGeometry { width: 2, height: 2, endianness: Endianness::Big });
    }

    proptest! {
        #[test]
        fn round_trip(values in prop::collection::vec(any::<u16>(), 1..64), big in any::<bool>()) {
            let endianness = if big { Endianness::Big } else { Endianness::Little };
            let bytes: Vec<u8> = values.iter().flat_map(|v| if big { v.to_be_bytes() } else { v.to_le_bytes() }).collect();
            let f = write(&bytes);
            let img = read_raw16(f.path(), values.len(), 1, endianness).unwrap();
            prop_assert_eq!(img.pixels(), &values[..]);
        }
    }
}
