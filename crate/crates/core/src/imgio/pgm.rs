//! Netpbm graymap (PGM) reading and writing.
//!
//! Both the plain (`P2`) and raw (`P5`) variants are read. Writing always
//! emits `P5`; samples wider than 8 bits are stored big-endian, two bytes
//! each, as Netpbm requires whenever maxval exceeds 255.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imgio::GrayImage;
use crate::mask::BinaryMask;

struct Header {
    plain: bool,
    width: usize,
    height: usize,
    maxval: u32,
    /// Offset of the first raster byte.
    data_start: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse(format!("expected {what} at byte {start}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("{what} out of range")))
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let plain = match bytes.get(..2) {
        Some(b"P2") => true,
        Some(b"P5") => false,
        Some(other) => {
            return Err(Error::Parse(format!(
                "unsupported magic {:?}, expected P2 or P5",
                String::from_utf8_lossy(other)
            )))
        }
        None => return Err(Error::Parse("file too short for a PGM header".into())),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if !cur.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(Error::Parse("missing whitespace after magic number".into()));
    }
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Parse(format!("zero image dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse(format!("maxval {maxval} outside 1..=65535")));
    }
    // a single whitespace byte separates the header from a binary raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ if plain => {}
        _ => return Err(Error::Parse("missing whitespace after maxval".into())),
    }
    Ok(Header {
        plain,
        width,
        height,
        maxval,
        data_start: cur.pos,
    })
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let header = parse_header(bytes)?;
    let n = header
        .width
        .checked_mul(header.height)
        .ok_or_else(|| Error::Parse("image dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(n);
    if header.plain {
        let mut cur = Cursor {
            bytes,
            pos: header.data_start,
        };
        for _ in 0..n {
            data.push(cur.number("sample")?);
        }
    } else {
        let wide = header.maxval > 255;
        let sample_bytes = if wide { 2 } else { 1 };
        let raster = &bytes[header.data_start..];
        if raster.len() < n * sample_bytes {
            return Err(Error::Parse(format!(
                "truncated raster: need {} bytes, have {}",
                n * sample_bytes,
                raster.len()
            )));
        }
        if wide {
            data.extend(raster.chunks_exact(2).take(n).map(|c| u32::from(u16::from_be_bytes([c[0], c[1]]))));
        } else {
            data.extend(raster[..n].iter().map(|&b| u32::from(b)));
        }
    }
    if let Some(v) = data.iter().find(|&&v| v > header.maxval) {
        return Err(Error::Parse(format!("sample {v} exceeds maxval {}", header.maxval)));
    }
    GrayImage::new(header.width, header.height, data.into_iter().map(|v| v as u16).collect())
}

/// Smallest of 255 / 4095 / 65535 that covers every sample.
fn pick_maxval(image: &GrayImage) -> u16 {
    match image.min_max().1 {
        0..=255 => 255,
        256..=4095 => 4095,
        _ => 65535,
    }
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    encode(image.width(), image.height(), pick_maxval(image), image.pixels().iter().copied())
}

fn encode(width: usize, height: usize, maxval: u16, samples: impl Iterator<Item = u16>) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    if maxval > 255 {
        for v in samples {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(samples.map(|v| v as u8));
    }
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn write_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(image)).map_err(|e| Error::io(path, e))
}

/// Writes a mask as an 8-bit `P5` graymap: 1 becomes 255, 0 stays 0.
pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(
        mask.width(),
        mask.height(),
        255,
        mask.bits().iter().map(|&b| if b { 255 } else { 0 }),
    );
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads any PGM as a mask; every nonzero sample is treated as inside.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let image = read_pgm(path)?;
    Ok(BinaryMask::from_image(&image))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plain_pgm_with_comments() {
        let text = b"P2\n# a comment\n3 2 # trailing\n4095\n0 1 2\n4095 7 8\n";
        let img = decode_pgm(text).unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.pixels(), &[0, 1, 2, 4095, 7, 8]);
    }

    #[test]
    fn twelve_bit_binary_is_big_endian() {
        let mut bytes = b"P5 2 1 4095\n".to_vec();
        bytes.extend_from_slice(&[0x0F, 0xFF, 0x01, 0x00]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!(img.pixels(), &[4095, 256]);
        let encoded = encode_pgm(&img);
        assert!(encoded.starts_with(b"P5\n2 1\n4095\n"));
        assert_eq!(decode_pgm(&encoded).unwrap(), img);
    }

    #[test]
    fn rejects_bad_headers() {
        for bad in [
            &b"P6\n1 1\n255\n\0\0\0"[..],
            b"P5\n1 1\n0\n\0",
            b"P5\n1 1\n65536\n\0\0",
            b"P5\n2 2\n255\n\0\0",
            b"P5\n2\n",
            b"P",
            b"P2\n2 1\n10\n3 11\n",
            b"P2\n2 1\n10\n3\n",
        ] {
            assert!(matches!(decode_pgm(bad), Err(Error::Parse(_))), "{:?}", String::from_utf8_lossy(bad));
        }
    }

    #[test]
    fn mask_round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let mask = BinaryMask::from_fn(5, 3, |x, y| (x + y) % 2 == 0);
        write_mask(&mask, &path).unwrap();
        let raw = fs::read(&path).unwrap();
        assert!(raw.starts_with(b"P5\n5 3\n255\n"));
        assert!(raw[11..].iter().all(|&b| b == 0 || b == 255));
        assert_eq!(read_mask(&path).unwrap(), mask);
    }

    proptest! {
        #[test]
        fn round_trip_is_lossless(w in 1usize..12, h in 1usize..12,
                                  data in prop::collection::vec(any::<u16>(), 144),
                                  narrow in any::<bool>()) {
            let pixels: Vec<u16> = data[..w * h].iter().map(|&v| if narrow { v % 256 } else { v }).collect();
            let img = GrayImage::new(w, h, pixels).unwrap();
            prop_assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
        }
    }
}
