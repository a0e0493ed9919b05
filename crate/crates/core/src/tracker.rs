//! Zig-zag boundary tracking.
//!
//! A walker moves with a fixed step, rotating its heading by a fixed angle
//! every step. While it sits in one region it keeps turning toward the other
//! one, so it inevitably crosses the boundary; the CUSUM detector fed with
//! the sampled intensities raises an alarm shortly after the crossing, the
//! walker records its position as a boundary point and flips its turning
//! direction. The resulting trajectory weaves back and forth across the
//! boundary and advances along it until it comes back to the first recorded
//! point.
//!
//! Positions use the pixel-center frame of [`crate::geom::Point`].

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::cusum::{AdaptedState, Alarm, ClassicConfig, ClassicState, Direction, Sidedness};
use crate::error::{Error, Result};
use crate::geom::{normalize_angle, Point};
use crate::imgio::GrayImage;

/// Smallest noise level assumed when deriving the classic decision interval
/// from probe data, so that noiseless images still get `H > 0`.
pub const SIGMA_FLOOR: f64 = 1.0;

/// Which change-point detector drives the walker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DetectorKind {
    /// Gaussian two-sided CUSUM. Unset parameters are derived from the
    /// bootstrap probes: `K = Δ/2` with `Δ` the inside/outside mean gap and
    /// `H = 5σ` with `σ` the pooled probe standard deviation (or `sigma`
    /// when given).
    Classic {
        k: Option<f64>,
        h: Option<f64>,
        sigma: Option<f64>,
    },
    /// Region-mean adapted CUSUM; `window` optionally bounds the running mean.
    Adapted { window: Option<usize> },
}

impl DetectorKind {
    pub const fn classic() -> Self {
        DetectorKind::Classic {
            k: None,
            h: None,
            sigma: None,
        }
    }

    pub const fn adapted() -> Self {
        DetectorKind::Adapted { window: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Distance moved per step, in pixels.
    pub step_size: f64,
    /// Heading change per step, radians in `(0, π)`.
    pub turn_angle: f64,
    /// Offset added to the starting heading. Zero starts the walker tangent
    /// to the boundary with the inside region on its turning side.
    pub initial_heading: f64,
    pub max_steps: usize,
    /// The walk closes once a change-point lands this close to the first one.
    pub closure_radius: f64,
    pub min_boundary_points: usize,
    pub detector: DetectorKind,
    /// Length of each bootstrap probe ray, in pixels.
    pub probe_length: f64,
    /// Minimum `|mu_inside - mu_outside|` accepted from the probes.
    pub min_contrast: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            step_size: 1.0,
            turn_angle: 0.35,
            initial_heading: 0.0,
            max_steps: 20_000,
            closure_radius: 3.0,
            min_boundary_points: 8,
            detector: DetectorKind::adapted(),
            probe_length: 5.0,
            min_contrast: 1.0,
        }
    }
}

impl TrackerConfig {
    // negated comparisons so that NaN fails every check
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let limit = width.min(height) as f64 / 2.0;
        if !(self.step_size > 0.0 && self.step_size < limit) {
            return bad(format!("step size {} must lie in (0, {limit})", self.step_size));
        }
        if !(self.turn_angle > 0.0 && self.turn_angle < PI) {
            return bad(format!("turn angle {} must lie in (0, π)", self.turn_angle));
        }
        if !self.initial_heading.is_finite() {
            return bad("initial heading must be finite".into());
        }
        if self.max_steps == 0 {
            return bad("max steps must be positive".into());
        }
        if !(self.closure_radius >= self.step_size) {
            return bad(format!(
                "closure radius {} must be at least the step size {}",
                self.closure_radius, self.step_size
            ));
        }
        if self.min_boundary_points < 3 {
            return bad("at least 3 boundary points are required".into());
        }
        if !(self.probe_length > 0.0 && self.probe_length.is_finite()) {
            return bad("probe length must be positive".into());
        }
        if !(self.min_contrast >= 0.0) {
            return bad("contrast floor must be non-negative".into());
        }
        match self.detector {
            DetectorKind::Adapted { window: Some(0) } => bad("mean window must be at least 1".into()),
            DetectorKind::Classic { k, h, sigma } => {
                if k.is_some_and(|k| !(k >= 0.0)) || h.is_some_and(|h| !(h > 0.0)) || sigma.is_some_and(|s| !(s > 0.0)) {
                    bad("classic K must be >= 0, H and sigma > 0".into())
                } else {
                    Ok(())
                }
            }
            DetectorKind::Adapted { .. } => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TurnSign {
    /// Counter-clockwise in the (x, y) frame: heading increases.
    Positive,
    Negative,
}

impl TurnSign {
    pub fn value(self) -> f64 {
        match self {
            TurnSign::Positive => 1.0,
            TurnSign::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            TurnSign::Positive => TurnSign::Negative,
            TurnSign::Negative => TurnSign::Positive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Point,
    /// Radians in `[0, 2π)`.
    pub heading: f64,
    pub turn_sign: TurnSign,
}

impl Pose {
    /// Turns, then moves one step. Ignores image bounds.
    pub fn step(&self, cfg: &TrackerConfig) -> Pose {
        let heading = normalize_angle(self.heading + self.turn_sign.value() * cfg.turn_angle);
        Pose {
            position: self.position.offset(heading, cfg.step_size),
            heading,
            turn_sign: self.turn_sign,
        }
    }

    /// [`step`](Self::step), failing if the new position cannot be sampled.
    pub fn step_within(&self, cfg: &TrackerConfig, image: &GrayImage) -> Result<Pose> {
        let next = self.step(cfg);
        if image.contains(next.position) {
            Ok(next)
        } else {
            Err(out_of_bounds(next.position, image))
        }
    }

    /// Like [`step_within`](Self::step_within), but a step that would leave
    /// the image is mirrored off the offending border(s) instead.
    pub fn step_reflecting(&self, cfg: &TrackerConfig, image: &GrayImage) -> Result<Pose> {
        let next = self.step(cfg);
        if image.contains(next.position) {
            return Ok(next);
        }
        let (lo_x, hi_x) = (0.5, image.width() as f64 - 0.5);
        let (lo_y, hi_y) = (0.5, image.height() as f64 - 0.5);
        let mut heading = next.heading;
        if !(lo_x..=hi_x).contains(&next.position.x) {
            heading = PI - heading;
        }
        if !(lo_y..=hi_y).contains(&next.position.y) {
            heading = -heading;
        }
        let heading = normalize_angle(heading);
        let position = self.position.offset(heading, cfg.step_size);
        if image.contains(position) {
            Ok(Pose {
                position,
                heading,
                turn_sign: self.turn_sign,
            })
        } else {
            Err(out_of_bounds(position, image))
        }
    }
}

fn out_of_bounds(p: Point, image: &GrayImage) -> Error {
    Error::OutOfBounds {
        x: p.x,
        y: p.y,
        width: image.width(),
        height: image.height(),
    }
}

/// Region statistics measured along two probe rays from the seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bootstrap {
    pub mu_inside: f64,
    pub mu_outside: f64,
    /// Pooled within-ray standard deviation.
    pub sigma: f64,
    pub samples_per_ray: usize,
}

/// Estimates inside and outside means from rays of `probe_length` cast
/// from `seed` toward `inside_dir` and the opposite way, sampled every
/// half step (the seed itself is skipped).
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn bootstrap_means(image: &GrayImage, seed: Point, inside_dir: f64, cfg: &TrackerConfig) -> Result<Bootstrap> {
    let spacing = cfg.step_size / 2.0;
    let n = ((cfg.probe_length / spacing) + 1e-9).floor().max(1.0) as usize;
    let ray = |angle: f64| -> Result<Vec<f64>> {
        (1..=n)
            .map(|k| image.sample_at(seed.offset(angle, k as f64 * spacing)))
            .collect()
    };
    let inside = ray(inside_dir)?;
    let outside = ray(inside_dir + PI)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mu_inside, mu_outside) = (mean(&inside), mean(&outside));
    let contrast = (mu_inside - mu_outside).abs();
    if !(contrast >= cfg.min_contrast) || contrast == 0.0 {
        return Err(Error::LowContrast {
            contrast,
            floor: cfg.min_contrast,
        });
    }
    let ss: f64 = inside.iter().map(|x| (x - mu_inside).powi(2)).sum::<f64>()
        + outside.iter().map(|x| (x - mu_outside).powi(2)).sum::<f64>();
    let dof = (2 * n).saturating_sub(2).max(1);
    Ok(Bootstrap {
        mu_inside,
        mu_outside,
        sigma: (ss / dof as f64).sqrt(),
        samples_per_ray: n,
    })
}

/// One detected crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub position: Point,
    pub direction: Direction,
    /// Walker step at which the alarm fired (1-based).
    pub step: usize,
}

/// Ordered change-point locations.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Boundary {
    pub points: Vec<Point>,
    /// Crossing direction per point. Empty for boundaries built by hand.
    pub directions: Vec<Direction>,
    pub closed: bool,
}

impl Boundary {
    pub fn from_points(points: Vec<Point>, closed: bool) -> Self {
        Boundary {
            points,
            directions: Vec::new(),
            closed,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn push(&mut self, c: &Crossing) {
        self.points.push(c.position);
        self.directions.push(c.direction);
    }

    /// `x,y` lines, one per point.
    pub fn to_csv(&self) -> String {
        self.points.iter().map(|p| format!("{},{}\n", p.x, p.y)).collect()
    }
}

/// Detector plus the bookkeeping needed to switch regions at a crossing.
#[derive(Debug, Clone)]
enum Detector {
    Classic {
        inside: ClassicConfig,
        outside: ClassicConfig,
        in_inside: bool,
        state: ClassicState,
    },
    Adapted {
        inside: f64,
        outside: f64,
        in_inside: bool,
        state: AdaptedState,
    },
}

impl Detector {
    fn new(kind: DetectorKind, boot: &Bootstrap) -> Result<Self> {
        match kind {
            DetectorKind::Classic { k, h, sigma } => {
                let gap = boot.mu_inside - boot.mu_outside;
                let sigma = sigma.unwrap_or(boot.sigma).max(SIGMA_FLOOR);
                let k = k.unwrap_or(gap.abs() / 2.0);
                let h = h.unwrap_or(5.0 * sigma);
                let outside = ClassicConfig::new(boot.mu_outside, k, h, Sidedness::TwoSided)?;
                Ok(Detector::Classic {
                    inside: outside.retarget(boot.mu_inside)?,
                    outside,
                    in_inside: false,
                    state: ClassicState::new(),
                })
            }
            DetectorKind::Adapted { window } => {
                let state = AdaptedState::new(boot.mu_inside, boot.mu_outside, window)?;
                Ok(Detector::Adapted {
                    inside: boot.mu_inside,
                    outside: boot.mu_outside,
                    in_inside: false,
                    state,
                })
            }
        }
    }

    fn update(&mut self, x: f64) -> Result<Option<Alarm>> {
        match self {
            Detector::Classic {
                inside,
                outside,
                in_inside,
                state,
            } => state.update(if *in_inside { inside } else { outside }, x),
            Detector::Adapted { state, .. } => state.update(x),
        }
    }

    fn run_length(&self, direction: Direction) -> usize {
        match self {
            Detector::Classic { state, .. } => state.run_length(direction),
            Detector::Adapted { state, .. } => state.run_length(direction),
        }
    }

    fn cross(&mut self) {
        match self {
            Detector::Classic { in_inside, state, .. } => {
                *in_inside = !*in_inside;
                state.reset();
            }
            Detector::Adapted { state, inside, outside, in_inside } => {
                *in_inside = !*in_inside;
                state.swap_regions_to(if *in_inside { *inside } else { *outside });
            }
        }
    }
}

/// Step-by-step boundary walker. [`track`] drives one to completion.
#[derive(Debug, Clone)]
pub struct Walker<'a> {
    image: &'a GrayImage,
    cfg: TrackerConfig,
    pose: Pose,
    detector: Detector,
    boundary: Boundary,
    bootstrap: Bootstrap,
    steps: usize,
    armed: bool,
}

impl<'a> Walker<'a> {
    /// Starts at `seed`, heading along the boundary tangent with the inside
    /// region on the turning side, believing it is in the outside region.
    pub fn new(image: &'a GrayImage, seed: Point, inside_dir: f64, cfg: &TrackerConfig) -> Result<Self> {
        cfg.validate(image.width(), image.height())?;
        if !image.contains(seed) {
            return Err(out_of_bounds(seed, image));
        }
        let bootstrap = bootstrap_means(image, seed, inside_dir, cfg)?;
        let detector = Detector::new(cfg.detector, &bootstrap)?;
        Ok(Walker {
            image,
            cfg: *cfg,
            pose: Pose {
                position: seed,
                heading: normalize_angle(inside_dir - FRAC_PI_2 + cfg.initial_heading),
                turn_sign: TurnSign::Positive,
            },
            detector,
            boundary: Boundary::default(),
            bootstrap,
            steps: 0,
            armed: false,
        })
    }

    pub fn pose(&self) -> &Pose {
        &self.pose
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn bootstrap(&self) -> &Bootstrap {
        &self.bootstrap
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Advances one step and returns the crossing detected on it, if any.
    pub fn advance(&mut self) -> Result<Option<Crossing>> {
        self.pose = self.pose.step_reflecting(&self.cfg, self.image)?;
        self.steps += 1;
        let x = self.image.sample_at(self.pose.position)?;
        let Some(alarm) = self.detector.update(x)? else {
            self.arm();
            return Ok(None);
        };
        let crossing = Crossing {
            position: self.pose.position,
            direction: alarm.direction,
            step: self.steps,
        };
        self.boundary.push(&crossing);
        self.pose.heading = self.heading_after_crossing(alarm);
        self.pose.turn_sign = self.pose.turn_sign.flipped();
        self.detector.cross();
        self.arm();
        Ok(Some(crossing))
    }

    /// Re-aims the walker along the boundary. Once three crossings exist,
    /// the chord from the previous crossing on the same side to this one
    /// estimates the tangent. Before that, the turns taken since the
    /// detector's estimated change time are undone: they were made while
    /// already past the boundary and point back toward the old region.
    fn heading_after_crossing(&self, alarm: Alarm) -> f64 {
        let points = &self.boundary.points;
        if let [.., a, _, b] = points[..] {
            // edges of a turning walk sit half a turn off the tangent at
            // their vertices, so this starts the next arc tangent to the chord
            let chord = (b.y - a.y).atan2(b.x - a.x);
            return normalize_angle(chord + self.pose.turn_sign.value() * self.cfg.turn_angle / 2.0);
        }
        let overshoot = self.detector.run_length(alarm.direction) as f64;
        normalize_angle(self.pose.heading - self.pose.turn_sign.value() * overshoot * self.cfg.turn_angle)
    }

    /// Whether the last crossing closed the loop.
    fn closes(&self) -> bool {
        let (Some(first), Some(last)) = (self.boundary.points.first(), self.boundary.points.last()) else {
            return false;
        };
        self.armed
            && self.boundary.len() >= self.cfg.min_boundary_points
            && first.distance(*last) <= self.cfg.closure_radius
    }

    // closure only counts once the walker has clearly left the first point
    fn arm(&mut self) {
        if !self.armed {
            if let Some(first) = self.boundary.points.first() {
                self.armed = first.distance(self.pose.position) > 2.0 * self.cfg.closure_radius;
            }
        }
    }

    /// Runs until the boundary closes or the step budget is spent.
    pub fn run(mut self) -> Result<Boundary> {
        while self.steps < self.cfg.max_steps {
            if self.advance()?.is_some() && self.closes() {
                self.boundary.closed = true;
                return Ok(self.boundary);
            }
        }
        Err(Error::NoClosure {
            steps: self.steps,
            partial: Box::new(self.boundary),
        })
    }
}

/// Tracks the boundary through `seed`, with `inside_dir` pointing into the
/// region of interest.
pub fn track(image: &GrayImage, seed: Point, inside_dir: f64, cfg: &TrackerConfig) -> Result<Boundary> {
    Walker::new(image, seed, inside_dir, cfg)?.run()
}
