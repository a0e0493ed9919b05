//! Streaming CUSUM change-point detectors.
//!
//! Three flavours share the same clipping and alarm conventions:
//!
//! * [`ClassicState::update`]: the two-sided Gaussian form. Each sample `x`
//!   moves the sums by `x - (mu0 + K)` (upper) and `x - (mu0 - K)` (lower).
//! * [`ClassicState::update_with_score`]: the generic form, where the caller
//!   supplies the per-sample score directly.
//! * [`AdaptedState::update`]: deviations are taken from `mu1`, the running
//!   mean of the region the walker is currently in, and the alarm threshold
//!   is the gap `|mu0 - mu1|` to the mean of the previously visited region.
//!
//! ```text
//! upper:  S+ = max(0, S+ + score)    alarm iff S+ >  threshold
//! lower:  S- = min(0, S- + score)    alarm iff S- < -threshold
//! ```
//!
//! Alarms are strict (a sum equal to the threshold does not fire) and alarm
//! indices are 1-based: the first sample consumed after construction or
//! [`reset`](ClassicState::reset) has index 1.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side(s) of a classic detector are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    Upper,
    Lower,
    TwoSided,
}

impl Sidedness {
    fn upper(self) -> bool {
        matches!(self, Sidedness::Upper | Sidedness::TwoSided)
    }

    fn lower(self) -> bool {
        matches!(self, Sidedness::Lower | Sidedness::TwoSided)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upward,
    Downward,
}

/// A detected change-point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alarm {
    /// 1-based sample index since the last reset.
    pub index: usize,
    pub direction: Direction,
}

/// Parameters of the classic two-sided Gaussian CUSUM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicConfig {
    mu0: f64,
    k: f64,
    h: f64,
    sidedness: Sidedness,
}

impl ClassicConfig {
    pub fn new(mu0: f64, k: f64, h: f64, sidedness: Sidedness) -> Result<Self> {
        if !mu0.is_finite() {
            return Err(Error::InvalidConfig(format!("target mean must be finite, got {mu0}")));
        }
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::InvalidConfig(format!("reference value K must be >= 0, got {k}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidConfig(format!("decision interval H must be > 0, got {h}")));
        }
        Ok(ClassicConfig { mu0, k, h, sidedness })
    }

    /// Standard tuning for a mean shift of size `delta` on data with standard
    /// deviation `sigma`: `K = |delta| / 2`, `H = 5 sigma`.
    pub fn from_shift(mu0: f64, delta: f64, sigma: f64, sidedness: Sidedness) -> Result<Self> {
        Self::new(mu0, delta.abs() / 2.0, 5.0 * sigma, sidedness)
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    /// Same `K`, `H` and sidedness around a different target mean.
    pub fn retarget(&self, mu0: f64) -> Result<Self> {
        Self::new(mu0, self.k, self.h, self.sidedness)
    }
}

/// Running sums of a classic or score-driven detector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassicState {
    s_plus: f64,
    s_minus: f64,
    plus_run: usize,
    minus_run: usize,
    n: usize,
}

impl ClassicState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn s_plus(&self) -> f64 {
        self.s_plus
    }

    pub fn s_minus(&self) -> f64 {
        self.s_minus
    }

    /// Samples consumed since the last reset.
    pub fn count(&self) -> usize {
        self.n
    }

    /// Samples since the given side's sum last sat at zero. At an alarm this
    /// is the usual CUSUM estimate of how long ago the change happened.
    pub fn run_length(&self, direction: Direction) -> usize {
        match direction {
            Direction::Upward => self.plus_run,
            Direction::Downward => self.minus_run,
        }
    }

    /// Feeds one intensity sample to the two-sided Gaussian detector.
    ///
    /// If both sides cross on the same sample the upward alarm is reported.
    pub fn update(&mut self, cfg: &ClassicConfig, x: f64) -> Result<Option<Alarm>> {
        ensure_finite(x)?;
        self.n += 1;
        let mut alarm = None;
        if cfg.sidedness.lower() {
            self.s_minus = (self.s_minus + (x - (cfg.mu0 - cfg.k))).min(0.0);
            self.minus_run = extend_run(self.minus_run, self.s_minus);
            if self.s_minus < -cfg.h {
                alarm = Some(self.alarm(Direction::Downward));
            }
        }
        if cfg.sidedness.upper() {
            self.s_plus = (self.s_plus + (x - (cfg.mu0 + cfg.k))).max(0.0);
            self.plus_run = extend_run(self.plus_run, self.s_plus);
            if self.s_plus > cfg.h {
                alarm = Some(self.alarm(Direction::Upward));
            }
        }
        Ok(alarm)
    }

    /// Upper-sided generic form: accumulates a caller-supplied score.
    pub fn update_with_score(&mut self, score: f64, h: f64) -> Result<Option<Alarm>> {
        ensure_finite(score)?;
        ensure_threshold(h)?;
        self.n += 1;
        self.s_plus = (self.s_plus + score).max(0.0);
        self.plus_run = extend_run(self.plus_run, self.s_plus);
        Ok((self.s_plus > h).then(|| self.alarm(Direction::Upward)))
    }

    /// Lower-sided mirror of [`update_with_score`](Self::update_with_score).
    pub fn update_with_lower_score(&mut self, score: f64, h: f64) -> Result<Option<Alarm>> {
        ensure_finite(score)?;
        ensure_threshold(h)?;
        self.n += 1;
        self.s_minus = (self.s_minus + score).min(0.0);
        self.minus_run = extend_run(self.minus_run, self.s_minus);
        Ok((self.s_minus < -h).then(|| self.alarm(Direction::Downward)))
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }

    fn alarm(&self, direction: Direction) -> Alarm {
        Alarm {
            index: self.n,
            direction,
        }
    }
}

/// Runs a fresh classic detector over `series` and returns the first alarm.
///
/// An empty series yields `Ok(None)`.
pub fn first_alarm(cfg: &ClassicConfig, series: &[f64]) -> Result<Option<Alarm>> {
    let mut state = ClassicState::new();
    for &x in series {
        if let Some(alarm) = state.update(cfg, x)? {
            return Ok(Some(alarm));
        }
    }
    Ok(None)
}

/// State of the region-mean-adapted detector.
///
/// `mu0` is the mean of the region on the far side of the boundary, `mu1`
/// the running mean of the region currently being sampled. A sample that
/// raises an alarm is not folded into `mu1`, since it already belongs to the
/// next region.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedState {
    mu0: f64,
    mu1: f64,
    mu1_sum: f64,
    mu1_count: usize,
    window: Option<usize>,
    recent: VecDeque<f64>,
    s_plus: f64,
    s_minus: f64,
    plus_run: usize,
    minus_run: usize,
    n: usize,
}

impl AdaptedState {
    /// `mu1` seeds the current-region mean as a single pseudo-observation.
    /// `window`, when set, limits the running mean to the last `window`
    /// observations.
    pub fn new(mu0: f64, mu1: f64, window: Option<usize>) -> Result<Self> {
        ensure_finite(mu0)?;
        ensure_finite(mu1)?;
        if window == Some(0) {
            return Err(Error::InvalidConfig("mean window must be at least 1".into()));
        }
        let mut state = AdaptedState {
            mu0,
            mu1,
            mu1_sum: 0.0,
            mu1_count: 0,
            window,
            recent: VecDeque::new(),
            s_plus: 0.0,
            s_minus: 0.0,
            plus_run: 0,
            minus_run: 0,
            n: 0,
        };
        state.restart_mean(mu1);
        Ok(state)
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu1_count(&self) -> usize {
        self.mu1_count
    }

    pub fn s_plus(&self) -> f64 {
        self.s_plus
    }

    pub fn s_minus(&self) -> f64 {
        self.s_minus
    }

    pub fn count(&self) -> usize {
        self.n
    }

    /// See [`ClassicState::run_length`].
    pub fn run_length(&self, direction: Direction) -> usize {
        match direction {
            Direction::Upward => self.plus_run,
            Direction::Downward => self.minus_run,
        }
    }

    /// Current decision threshold `|mu0 - mu1|`.
    pub fn threshold(&self) -> f64 {
        (self.mu0 - self.mu1).abs()
    }

    pub fn update(&mut self, x: f64) -> Result<Option<Alarm>> {
        ensure_finite(x)?;
        let threshold = self.threshold();
        if threshold == 0.0 {
            return Err(Error::DegenerateThreshold(self.mu0));
        }
        self.n += 1;
        let deviation = x - self.mu1;
        self.s_plus = (self.s_plus + deviation).max(0.0);
        self.s_minus = (self.s_minus + deviation).min(0.0);
        self.plus_run = extend_run(self.plus_run, self.s_plus);
        self.minus_run = extend_run(self.minus_run, self.s_minus);
        let alarm = if self.s_plus > threshold {
            Some(Direction::Upward)
        } else if self.s_minus < -threshold {
            Some(Direction::Downward)
        } else {
            None
        };
        match alarm {
            Some(direction) => Ok(Some(Alarm {
                index: self.n,
                direction,
            })),
            None => {
                self.fold(x);
                Ok(None)
            }
        }
    }

    /// Zeroes both sums and the sample counter and restarts the `mu1`
    /// accumulator from its current value.
    pub fn reset(&mut self) {
        self.s_plus = 0.0;
        self.s_minus = 0.0;
        self.plus_run = 0;
        self.minus_run = 0;
        self.n = 0;
        self.restart_mean(self.mu1);
    }

    /// Handles a boundary crossing: the region just left becomes the
    /// reference (`mu0`), the previous reference seeds the new current-region
    /// mean, and the sums are reset.
    pub fn swap_regions(&mut self) {
        let prior = self.mu0;
        self.swap_regions_to(prior);
    }

    /// Like [`swap_regions`](Self::swap_regions), but the new region's mean
    /// restarts from `prior` instead of the previous reference.
    pub fn swap_regions_to(&mut self, prior: f64) {
        self.mu0 = self.mu1;
        self.mu1 = prior;
        self.reset();
    }

    fn restart_mean(&mut self, seed: f64) {
        self.recent.clear();
        self.mu1 = seed;
        match self.window {
            Some(_) => {
                self.recent.push_back(seed);
                self.mu1_sum = seed;
                self.mu1_count = 1;
            }
            None => {
                self.mu1_sum = 0.0;
                self.mu1_count = 1;
            }
        }
    }

    fn fold(&mut self, x: f64) {
        match self.window {
            Some(w) => {
                self.recent.push_back(x);
                self.mu1_sum += x;
                if self.recent.len() > w {
                    if let Some(old) = self.recent.pop_front() {
                        self.mu1_sum -= old;
                    }
                }
                self.mu1_count = self.recent.len();
                self.mu1 = self.mu1_sum / self.mu1_count as f64;
            }
            None => {
                self.mu1_count += 1;
                // incremental form keeps mu1 exact when every sample equals it
                self.mu1 += (x - self.mu1) / self.mu1_count as f64;
            }
        }
    }
}

fn extend_run(run: usize, sum: f64) -> usize {
    if sum == 0.0 {
        0
    } else {
        run + 1
    }
}

fn ensure_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(x))
    }
}

fn ensure_threshold(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("decision interval must be > 0, got {h}")))
    }
}
