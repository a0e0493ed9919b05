//! End-to-end segmentation and batch evaluation on synthetic phantoms.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::imgio::{gen_phantom, GrayImage, PhantomSpec, RNG_ALGORITHM};
use crate::mask::{rasterize, BinaryMask};
use crate::metrics::{dice, threshold_segment, DiceReport};
use crate::tracker::{track, Boundary, DetectorKind, TrackerConfig};

/// Number of evenly spaced candidates tried when the baseline threshold is
/// picked automatically.
pub const THRESHOLD_CANDIDATES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub boundary: Boundary,
    pub mask: BinaryMask,
}

/// Tracks the boundary from `seed` and rasterizes it.
pub fn segment(image: &GrayImage, seed: Point, inside_dir: f64, cfg: &TrackerConfig) -> Result<Segmentation> {
    let boundary = track(image, seed, inside_dir, cfg)?;
    let mask = rasterize(&boundary, image.width(), image.height())?;
    Ok(Segmentation { boundary, mask })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Adapted,
    Classic,
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub count: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    /// Tracker parameters; the detector field is overridden per method.
    pub tracker: TrackerConfig,
    /// Fixed baseline threshold. When unset, the best of
    /// [`THRESHOLD_CANDIDATES`] evenly spaced values is used.
    pub threshold: Option<f64>,
    pub keep_largest: bool,
    /// Seed point and inside direction. Defaults to the first brain shape's
    /// boundary point.
    pub seed: Option<(Point, f64)>,
}

impl EvalConfig {
    pub fn new(count: usize, base_seed: u64, methods: Vec<Method>) -> Self {
        EvalConfig {
            count,
            base_seed,
            methods,
            tracker: TrackerConfig::default(),
            threshold: None,
            keep_largest: false,
            seed: None,
        }
    }
}

/// One phantom's outcome under one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub rng_seed: u64,
    pub dice: f64,
    /// Whether tracking closed; always true for the threshold baseline.
    pub closed: bool,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub dice: DiceReport,
    pub images: Vec<ImageRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rng_algorithm: String,
    pub count: usize,
    pub base_seed: u64,
    pub seed_point: Point,
    pub inside_dir: f64,
    pub methods: Vec<MethodReport>,
}

impl EvalReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }
}

struct Case {
    rng_seed: u64,
    image: GrayImage,
    truth: BinaryMask,
}

/// Generates `count` phantoms with seeds `base_seed..base_seed + count` and
/// scores every requested method against the truth masks. A tracker run that
/// fails to close scores 0 for that image.
pub fn evaluate(template: &PhantomSpec, cfg: &EvalConfig) -> Result<EvalReport> {
    if cfg.count == 0 {
        return Err(Error::InvalidConfig("evaluation needs at least one image".into()));
    }
    if cfg.methods.is_empty() {
        return Err(Error::InvalidConfig("no methods requested".into()));
    }
    let (seed_point, inside_dir) = match cfg.seed {
        Some(s) => s,
        None => template
            .seed_point()
            .ok_or_else(|| Error::InvalidConfig("phantom has no brain shape to seed from".into()))?,
    };
    let cases = (0..cfg.count as u64)
        .into_par_iter()
        .map(|i| {
            let rng_seed = cfg.base_seed.wrapping_add(i);
            let (image, truth) = gen_phantom(&template.with_seed(rng_seed))?;
            Ok(Case { rng_seed, image, truth })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut methods = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let report = match method {
            Method::Adapted | Method::Classic => {
                // keep the configured detector parameters when they match the method
                let detector = match (method, cfg.tracker.detector) {
                    (Method::Classic, d @ DetectorKind::Classic { .. }) | (Method::Adapted, d @ DetectorKind::Adapted { .. }) => d,
                    (Method::Classic, _) => DetectorKind::classic(),
                    _ => DetectorKind::adapted(),
                };
                let tracker = TrackerConfig { detector, ..cfg.tracker };
                let images = cases
                    .par_iter()
                    .map(|case| tracked_record(case, seed_point, inside_dir, &tracker))
                    .collect::<Result<Vec<_>>>()?;
                method_report(method, images, None)?
            }
            Method::Threshold => {
                let t = match cfg.threshold {
                    Some(t) => t,
                    None => best_threshold(&cases, cfg.keep_largest)?,
                };
                let images = cases
                    .par_iter()
                    .map(|case| threshold_record(case, t, cfg.keep_largest))
                    .collect::<Result<Vec<_>>>()?;
                method_report(method, images, Some(t))?
            }
        };
        methods.push(report);
    }
    Ok(EvalReport {
        rng_algorithm: RNG_ALGORITHM.to_string(),
        count: cfg.count,
        base_seed: cfg.base_seed,
        seed_point,
        inside_dir,
        methods,
    })
}

fn method_report(method: Method, images: Vec<ImageRecord>, threshold: Option<f64>) -> Result<MethodReport> {
    let dice = DiceReport::new(images.iter().map(|r| r.dice).collect())?;
    Ok(MethodReport {
        method,
        dice,
        images,
        threshold,
    })
}

fn tracked_record(case: &Case, seed: Point, inside_dir: f64, cfg: &TrackerConfig) -> Result<ImageRecord> {
    let start = Instant::now();
    let outcome = segment(&case.image, seed, inside_dir, cfg);
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let (score, closed) = match outcome {
        Ok(seg) => (dice(&seg.mask, &case.truth)?, true),
        Err(Error::NoClosure { .. }) => (0.0, false),
        Err(e) => return Err(e),
    };
    Ok(ImageRecord {
        rng_seed: case.rng_seed,
        dice: score,
        closed,
        ms,
    })
}

fn threshold_record(case: &Case, t: f64, keep_largest: bool) -> Result<ImageRecord> {
    let start = Instant::now();
    let mask = threshold_segment(&case.image, t, keep_largest);
    let ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(ImageRecord {
        rng_seed: case.rng_seed,
        dice: dice(&mask, &case.truth)?,
        closed: true,
        ms,
    })
}

/// Evenly spaced thresholds strictly between `lo` and `hi`.
pub fn threshold_candidates(lo: f64, hi: f64) -> Vec<f64> {
    let n = THRESHOLD_CANDIDATES;
    (1..=n).map(|k| lo + k as f64 * (hi - lo) / (n + 1) as f64).collect()
}

/// Candidate with the highest mean Dice over all cases; the lowest wins ties.
fn best_threshold(cases: &[Case], keep_largest: bool) -> Result<f64> {
    let (lo, hi) = cases.iter().fold((u16::MAX, 0), |(lo, hi), c| {
        let (a, b) = c.image.min_max();
        (lo.min(a), hi.max(b))
    });
    let mut best = (f64::NEG_INFINITY, f64::from(lo));
    for t in threshold_candidates(f64::from(lo), f64::from(hi)) {
        let total = cases
            .par_iter()
            .map(|c| dice(&threshold_segment(&c.image, t, keep_largest), &c.truth))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .sum::<f64>();
        if total > best.0 {
            best = (total, t);
        }
    }
    Ok(best.1)
}
