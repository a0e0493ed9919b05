//! Seedable synthetic phantoms with known ground truth.
//!
//! Shapes are painted in list order over a uniform background, later shapes
//! overwriting earlier ones. Noise is added after painting and clamped to the
//! 16-bit range. For a given spec (including `rng_seed`) the output is fixed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::imgio::GrayImage;
use crate::mask::BinaryMask;

/// Identity of the noise generator, echoed in run reports.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng(seed_from_u64) + rand_distr::Normal";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Disk {
        center: [f64; 2],
        radius: f64,
        intensity: u16,
        #[serde(default)]
        brain: bool,
    },
    Annulus {
        center: [f64; 2],
        inner_radius: f64,
        outer_radius: f64,
        intensity: u16,
        #[serde(default)]
        brain: bool,
    },
    /// Everything on the side of the line through `point` that `normal`
    /// (an angle in radians) points into.
    HalfPlane {
        point: [f64; 2],
        normal: f64,
        intensity: u16,
        #[serde(default)]
        brain: bool,
    },
}

impl Shape {
    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Shape::Disk { center, radius, .. } => p.distance(Point::new(center[0], center[1])) < radius,
            Shape::Annulus {
                center,
                inner_radius,
                outer_radius,
                ..
            } => {
                let d = p.distance(Point::new(center[0], center[1]));
                d >= inner_radius && d < outer_radius
            }
            Shape::HalfPlane { point, normal, .. } => {
                (p.x - point[0]) * normal.cos() + (p.y - point[1]) * normal.sin() >= 0.0
            }
        }
    }

    pub fn intensity(&self) -> u16 {
        match *self {
            Shape::Disk { intensity, .. } | Shape::Annulus { intensity, .. } | Shape::HalfPlane { intensity, .. } => {
                intensity
            }
        }
    }

    pub fn is_brain(&self) -> bool {
        match *self {
            Shape::Disk { brain, .. } | Shape::Annulus { brain, .. } | Shape::HalfPlane { brain, .. } => brain,
        }
    }

    fn validate(&self, width: usize, height: usize) -> Result<()> {
        let (w, h) = (width as f64, height as f64);
        let fits = |c: [f64; 2], r: f64| c[0] - r >= 0.0 && c[0] + r <= w && c[1] - r >= 0.0 && c[1] + r <= h;
        match *self {
            Shape::Disk { center, radius, .. } => {
                if !(radius.is_finite() && radius > 0.0) || !fits(center, radius) {
                    return Err(Error::InvalidConfig(format!(
                        "disk at {center:?} with radius {radius} does not fit the {width}x{height} canvas"
                    )));
                }
            }
            Shape::Annulus {
                center,
                inner_radius,
                outer_radius,
                ..
            } => {
                if !(inner_radius >= 0.0 && outer_radius > inner_radius) || !fits(center, outer_radius) {
                    return Err(Error::InvalidConfig(format!(
                        "annulus at {center:?} with radii {inner_radius}..{outer_radius} does not fit the canvas"
                    )));
                }
            }
            Shape::HalfPlane { point, normal, .. } => {
                if !normal.is_finite() || !(point[0] >= 0.0 && point[0] <= w && point[1] >= 0.0 && point[1] <= h) {
                    return Err(Error::InvalidConfig(format!("half-plane anchor {point:?} is off the canvas")));
                }
            }
        }
        Ok(())
    }

    /// A point on the shape's outer boundary and the direction pointing
    /// into the shape from there.
    fn boundary_seed(&self) -> (Point, f64) {
        match *self {
            Shape::Disk { center, radius, .. } => (Point::new(center[0] + radius, center[1]), std::f64::consts::PI),
            Shape::Annulus {
                center, outer_radius, ..
            } => (Point::new(center[0] + outer_radius, center[1]), std::f64::consts::PI),
            Shape::HalfPlane { point, normal, .. } => (Point::new(point[0], point[1]), normal),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    #[default]
    None,
    Gaussian {
        sigma: f64,
    },
    /// Gaussian noise plus far-out values: each pixel is independently
    /// replaced by `outlier_value` with probability `outlier_fraction`.
    GaussianSalt {
        sigma: f64,
        outlier_fraction: f64,
        outlier_value: u16,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub background: u16,
    pub shapes: Vec<Shape>,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub rng_seed: u64,
}

impl PhantomSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: PhantomSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_seed(&self, rng_seed: u64) -> Self {
        PhantomSpec {
            rng_seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig("phantom dimensions must be nonzero".into()));
        }
        for shape in &self.shapes {
            shape.validate(self.width, self.height)?;
        }
        let (sigma, fraction) = match self.noise {
            Noise::None => (0.0, 0.0),
            Noise::Gaussian { sigma } => (sigma, 0.0),
            Noise::GaussianSalt {
                sigma, outlier_fraction, ..
            } => (sigma, outlier_fraction),
        };
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!("noise sigma must be >= 0, got {sigma}")));
        }
        if !(0.0..=0.05).contains(&fraction) {
            return Err(Error::InvalidConfig(format!(
                "outlier fraction must lie in [0, 0.05], got {fraction}"
            )));
        }
        Ok(())
    }

    /// Seed point and inside direction on the first brain shape's boundary.
    pub fn seed_point(&self) -> Option<(Point, f64)> {
        self.shapes.iter().find(|s| s.is_brain()).map(Shape::boundary_seed)
    }
}

/// Paints the phantom and its truth mask: pixels whose centers fall inside
/// any shape flagged `brain`.
pub fn gen_phantom(spec: &PhantomSpec) -> Result<(GrayImage, BinaryMask)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut values = vec![f64::from(spec.background); w * h];
    let mut truth = BinaryMask::empty(w, h);
    for y in 0..h {
        for x in 0..w {
            let p = Point::pixel_center(x, y);
            for shape in &spec.shapes {
                if shape.contains(p) {
                    values[y * w + x] = f64::from(shape.intensity());
                    if shape.is_brain() {
                        truth.set(x, y, true);
                    }
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let (sigma, salt) = match spec.noise {
        Noise::None => (0.0, None),
        Noise::Gaussian { sigma } => (sigma, None),
        Noise::GaussianSalt {
            sigma,
            outlier_fraction,
            outlier_value,
        } => (sigma, Some((outlier_fraction, f64::from(outlier_value)))),
    };
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    if sigma > 0.0 || salt.is_some() {
        for v in values.iter_mut() {
            if sigma > 0.0 {
                *v += normal.sample(&mut rng);
            }
            if let Some((fraction, outlier)) = salt {
                if rng.random::<f64>() < fraction {
                    *v = outlier;
                }
            }
        }
    }
    let pixels = values.into_iter().map(|v| v.round().clamp(0.0, 65535.0) as u16).collect();
    Ok((GrayImage::new(w, h, pixels)?, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_spec(noise: Noise, seed: u64) -> PhantomSpec {
        PhantomSpec {
            width: 128,
            height: 128,
            background: 200,
            shapes: vec![Shape::Disk {
                center: [64.0, 64.0],
                radius: 40.0,
                intensity: 1000,
                brain: true,
            }],
            noise,
            rng_seed: seed,
        }
    }

    #[test]
    fn noiseless_disk_truth_matches_distance_oracle() {
        let (img, truth) = gen_phantom(&disk_spec(Noise::None, 0)).unwrap();
        let mut expected = 0;
        for j in 0..128 {
            for i in 0..128 {
                let (dx, dy) = (i as f64 + 0.5 - 64.0, j as f64 + 0.5 - 64.0);
                let inside = dx * dx + dy * dy < 1600.0;
                expected += usize::from(inside);
                assert_eq!(truth.get(i, j), inside);
                assert_eq!(img.get(i, j), if inside { 1000 } else { 200 });
            }
        }
        assert_eq!(truth.area(), expected);
    }

    #[test]
    fn same_seed_same_image() {
        let spec = disk_spec(Noise::Gaussian { sigma: 50.0 }, 11);
        assert_eq!(gen_phantom(&spec).unwrap(), gen_phantom(&spec).unwrap());
        let other = gen_phantom(&spec.with_seed(12)).unwrap();
        assert_ne!(gen_phantom(&spec).unwrap().0, other.0);
    }

    #[test]
    fn salt_count_is_binomial() {
        // expected 16384 * 0.01 = 163.84 per image, sd ~12.7; mean of 20 images has sd ~2.85
        let n = 20;
        let total: usize = (0..n)
            .map(|seed| {
                let spec = disk_spec(
                    Noise::GaussianSalt {
                        sigma: 0.0,
                        outlier_fraction: 0.01,
                        outlier_value: 4095,
                    },
                    seed,
                );
                let (img, _) = gen_phantom(&spec).unwrap();
                img.pixels().iter().filter(|&&v| v == 4095).count()
            })
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 163.84).abs() < 4.0 * 2.85, "mean outlier count {mean}");
    }

    #[test]
    fn later_shapes_overwrite() {
        let spec = PhantomSpec {
            width: 32,
            height: 32,
            background: 10,
            shapes: vec![
                Shape::Disk { center: [16.0, 16.0], radius: 10.0, intensity: 500, brain: true },
                Shape::Disk { center: [16.0, 16.0], radius: 3.0, intensity: 50, brain: false },
            ],
            noise: Noise::None,
            rng_seed: 0,
        };
        let (img, truth) = gen_phantom(&spec).unwrap();
        assert_eq!(img.get(16, 16), 50);
        assert!(truth.get(16, 16));
        assert_eq!(img.get(16, 8), 500);
        assert_eq!(img.get(0, 0), 10);
    }

    #[test]
    fn validation_errors() {
        let mut spec = disk_spec(Noise::None, 0);
        spec.shapes.push(Shape::Disk { center: [120.0, 64.0], radius: 20.0, intensity: 1, brain: false });
        assert!(gen_phantom(&spec).is_err());
        let spec = disk_spec(
            Noise::GaussianSalt { sigma: 1.0, outlier_fraction: 0.2, outlier_value: 0 },
            0,
        );
        assert!(spec.validate().is_err());
        assert!(PhantomSpec::from_json("{not json").is_err());
    }

    #[test]
    fn json_spec_parses() {
        let spec = PhantomSpec::from_json(
            r#"{"width": 64, "height": 64, "background": 100,
                "shapes": [{"kind": "half_plane", "point": [32, 32], "normal": 0, "intensity": 900, "brain": true}],
                "noise": {"kind": "gaussian", "sigma": 5}, "rng_seed": 3}"#,
        )
        .unwrap();
        let (seed, dir) = spec.seed_point().unwrap();
        assert_eq!((seed, dir), (Point::new(32.0, 32.0), 0.0));
        let (_, truth) = gen_phantom(&spec).unwrap();
        assert_eq!(truth.area(), 32 * 64);
    }

    #[test]
    fn noise_is_clamped() {
        let mut spec = disk_spec(Noise::Gaussian { sigma: 5000.0 }, 1);
        spec.background = 0;
        let (img, _) = gen_phantom(&spec).unwrap();
        let (lo, _) = img.min_max();
        assert_eq!(lo, 0);
    }
}
