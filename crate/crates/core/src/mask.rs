//! Binary ROI masks and polygon rasterization.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::imgio::GrayImage;
use crate::tracker::Boundary;

/// A per-pixel inside/outside grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        BinaryMask { width, height, bits }
    }

    /// Nonzero pixels become 1.
    pub fn from_image(image: &GrayImage) -> Self {
        BinaryMask {
            width: image.width(),
            height: image.height(),
            bits: image.pixels().iter().map(|&v| v != 0).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    /// Number of 1-pixels.
    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn same_shape(&self, other: &BinaryMask) -> Result<()> {
        if (self.width, self.height) == (other.width, other.height) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(self.width, self.height, other.width, other.height))
        }
    }

    pub fn intersect(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.same_shape(other)?;
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && b).collect(),
        })
    }

    /// `|self ∩ other|` without materializing the intersection.
    pub fn overlap(&self, other: &BinaryMask) -> Result<usize> {
        self.same_shape(other)?;
        Ok(self.bits.iter().zip(&other.bits).filter(|(&a, &b)| a && b).count())
    }

    /// Pixelwise complement.
    pub fn invert(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Whether every 1-pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.same_shape(other).is_ok() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

/// Rasterizes a closed tracked boundary.
pub fn rasterize(boundary: &Boundary, width: usize, height: usize) -> Result<BinaryMask> {
    if !boundary.closed {
        return Err(Error::InvalidBoundary("boundary is not closed".into()));
    }
    let points = &boundary.points;
    let (w, h) = (width as f64, height as f64);
    if let Some(p) = points
        .iter()
        .find(|p| !(p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= h))
    {
        return Err(Error::InvalidBoundary(format!(
            "point ({:.3}, {:.3}) lies outside the {width}x{height} canvas",
            p.x, p.y
        )));
    }
    fill_polygon(points, width, height)
}

/// Even-odd scanline fill: pixel `(i, j)` is set iff its center
/// `(i + 0.5, j + 0.5)` lies inside the polygon closed from the last vertex
/// back to the first. Edges are half-open in `y`, so a center exactly on a
/// vertex row is counted once.
pub fn fill_polygon(points: &[Point], width: usize, height: usize) -> Result<BinaryMask> {
    if points.len() < 3 {
        return Err(Error::InvalidBoundary(format!(
            "a polygon needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut mask = BinaryMask::empty(width, height);
    let mut crossings = Vec::new();
    for j in 0..height {
        let yc = j as f64 + 0.5;
        crossings.clear();
        let mut prev = points[points.len() - 1];
        for &cur in points {
            if (cur.y > yc) != (prev.y > yc) {
                crossings.push(cur.x + (yc - cur.y) * (prev.x - cur.x) / (prev.y - cur.y));
            }
            prev = cur;
        }
        crossings.sort_by(f64::total_cmp);
        for span in crossings.chunks_exact(2) {
            let start = first_center_at_or_after(span[0]);
            let end = first_center_at_or_after(span[1]).min(width);
            for i in start.min(width)..end {
                mask.set(i, j, true);
            }
        }
    }
    Ok(mask)
}

/// Smallest pixel index whose center is `>= x` (clamped at 0).
fn first_center_at_or_after(x: f64) -> usize {
    if x <= 0.5 {
        return 0;
    }
    let mut i = (x - 0.5).ceil() as usize;
    while (i as f64 + 0.5) < x {
        i += 1;
    }
    while i > 0 && ((i - 1) as f64 + 0.5) >= x {
        i -= 1;
    }
    i
}
