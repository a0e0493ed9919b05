use serde::{Deserialize, Serialize};

/// A position in continuous image coordinates.
///
/// Pixel `(i, j)` covers `[i, i+1) x [j, j+1)` and has its center at
/// `(i + 0.5, j + 0.5)`. Tracker positions, boundary points and phantom
/// shapes all live in this frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Moves `length` along the direction `angle` (radians, measured from +x toward +y).
    pub fn offset(self, angle: f64, length: f64) -> Point {
        Point::new(self.x + length * angle.cos(), self.y + length * angle.sin())
    }

    /// Center of pixel `(i, j)`.
    pub fn pixel_center(i: usize, j: usize) -> Point {
        Point::new(i as f64 + 0.5, j as f64 + 0.5)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(std::f64::consts::TAU);
    // rem_euclid can return exactly TAU for tiny negative inputs
    if a >= std::f64::consts::TAU {
        0.0
    } else {
        a
    }
}
