//! Grayscale images, dynamic series, file formats and synthetic phantoms.

mod phantom;
mod pgm;
mod raw;

pub use phantom::{gen_phantom, Noise, PhantomSpec, Shape, RNG_ALGORITHM};
pub use pgm::{decode_pgm, encode_pgm, read_mask, read_pgm, write_mask, write_pgm};
pub use raw::{read_raw16, read_raw16_series, read_sidecar, sidecar_path, Endianness, RawGeometry};

use crate::error::{Error, Result};
use crate::geom::Point;

/// Time-point used when none is requested: the first frame at which the
/// contrast signal has settled.
pub const DEFAULT_TIMEPOINT: usize = 4;

/// A single-channel image with 16-bit intensities stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig(format!(
                "image dimensions must be nonzero, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidConfig(format!(
                "{width}x{height} image needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u16) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u16] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    pub fn min_max(&self) -> (u16, u16) {
        self.data
            .iter()
            .fold((u16::MAX, u16::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Bilinear interpolation in pixel-index coordinates, where pixel
    /// `(i, j)` sits exactly at `(i, j)`. Valid over
    /// `[0, width-1] x [0, height-1]`.
    pub fn sample(&self, x: f64, y: f64) -> Result<f64> {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        if !(x >= 0.0 && x <= max_x && y >= 0.0 && y <= max_y) {
            return Err(Error::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        let (x0, fx) = split(x, self.width);
        let (y0, fy) = split(y, self.height);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let v = |xx, yy| f64::from(self.get(xx, yy));
        let top = v(x0, y0) * (1.0 - fx) + v(x1, y0) * fx;
        let bottom = v(x0, y1) * (1.0 - fx) + v(x1, y1) * fx;
        Ok(top * (1.0 - fy) + bottom * fy)
    }

    /// Bilinear interpolation at a point of the continuous pixel-center frame
    /// used by the tracker (pixel `(i, j)` centered at `(i + 0.5, j + 0.5)`).
    pub fn sample_at(&self, p: Point) -> Result<f64> {
        self.sample(p.x - 0.5, p.y - 0.5).map_err(|_| Error::OutOfBounds {
            x: p.x,
            y: p.y,
            width: self.width,
            height: self.height,
        })
    }

    /// Whether `p` (pixel-center frame) can be sampled.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0.5 && p.x <= self.width as f64 - 0.5 && p.y >= 0.5 && p.y <= self.height as f64 - 0.5
    }
}

fn split(coord: f64, len: usize) -> (usize, f64) {
    let base = (coord.floor() as usize).min(len.saturating_sub(2));
    (base, coord - base as f64)
}

/// An ordered dynamic series of equally sized frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Series {
    frames: Vec<GrayImage>,
}

impl Series {
    pub fn new(frames: Vec<GrayImage>) -> Result<Self> {
        let first = frames.first().ok_or(Error::Empty("series has no frames"))?;
        let (w, h) = (first.width(), first.height());
        if let Some(bad) = frames.iter().find(|f| f.width() != w || f.height() != h) {
            return Err(Error::DimensionMismatch(w, h, bad.width(), bad.height()));
        }
        Ok(Series { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[GrayImage] {
        &self.frames
    }

    /// Returns the frame at 1-based `index`.
    pub fn select_timepoint(&self, index: usize) -> Result<&GrayImage> {
        if index == 0 || index > self.frames.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.frames.len(),
            });
        }
        Ok(&self.frames[index - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(n: usize) -> Series {
        Series::new((0..n).map(|i| GrayImage::filled(4, 4, i as u16).unwrap()).collect()).unwrap()
    }

    #[test]
    fn sample_integer_positions_exact() {
        let img = GrayImage::from_fn(5, 4, |x, y| (x * 10 + y * 100) as u16).unwrap();
        for y in 0..4 {
            for x in 0..5 {
                assert_eq!(img.sample(x as f64, y as f64).unwrap(), f64::from(img.get(x, y)));
            }
        }
    }

    #[test]
    fn sample_midpoint() {
        let img = GrayImage::new(2, 1, vec![100, 300]).unwrap();
        assert_eq!(img.sample(0.5, 0.0).unwrap(), 200.0);
        assert_eq!(img.sample_at(Point::new(1.0, 0.5)).unwrap(), 200.0);
    }

    #[test]
    fn sample_out_of_bounds() {
        let img = GrayImage::filled(3, 3, 1).unwrap();
        assert!(matches!(img.sample(-0.5, 0.0), Err(Error::OutOfBounds { .. })));
        assert!(img.sample(2.0001, 1.0).is_err());
        assert!(img.sample(f64::NAN, 1.0).is_err());
        assert!(img.sample(2.0, 2.0).is_ok());
        assert!(img.sample_at(Point::new(0.4, 1.0)).is_err());
    }

    #[test]
    fn invalid_dimensions() {
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn timepoint_selection() {
        let s = series(40);
        assert_eq!(s.select_timepoint(DEFAULT_TIMEPOINT).unwrap().get(0, 0), 3);
        assert!(matches!(
            s.select_timepoint(41),
            Err(Error::IndexOutOfRange { index: 41, len: 40 })
        ));
        assert!(s.select_timepoint(0).is_err());
        assert_eq!(series(1).select_timepoint(1).unwrap().get(0, 0), 0);
    }

    #[test]
    fn series_rejects_mismatched_frames() {
        let frames = vec![GrayImage::filled(2, 2, 0).unwrap(), GrayImage::filled(3, 2, 0).unwrap()];
        assert!(matches!(Series::new(frames), Err(Error::DimensionMismatch(2, 2, 3, 2))));
        assert!(Series::new(vec![]).is_err());
    }
}
