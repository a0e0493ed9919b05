//! Overlap scoring and the global-threshold baseline.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgio::GrayImage;
use crate::mask::BinaryMask;

/// Dice similarity `2|a ∩ b| / (|a| + |b|)`. Two empty masks score 1.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let overlap = a.overlap(b)?;
    let total = a.area() + b.area();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * overlap as f64 / total as f64)
}

/// Arithmetic mean and sample (n-1) standard deviation.
pub fn aggregate(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Empty("cannot aggregate an empty list"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// Per-image Dice values with their mean ± std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiceReport {
    pub per_image: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl DiceReport {
    pub fn new(per_image: Vec<f64>) -> Result<Self> {
        if let Some(bad) = per_image.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::InvalidConfig(format!("dice value {bad} outside [0, 1]")));
        }
        let (mean, std) = aggregate(&per_image)?;
        Ok(DiceReport { per_image, mean, std })
    }
}

/// Marks pixels with intensity `>= t`. With `keep_largest`, only the largest
/// 4-connected component survives (ties go to the one found first in
/// row-major order).
pub fn threshold_segment(image: &GrayImage, t: f64, keep_largest: bool) -> BinaryMask {
    let raw = BinaryMask::from_fn(image.width(), image.height(), |x, y| f64::from(image.get(x, y)) >= t);
    if keep_largest {
        largest_component(&raw)
    } else {
        raw
    }
}

pub fn largest_component(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut label = vec![0u32; w * h];
    let mut best = (0u32, 0usize);
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.bits()[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        queue.push_back(start);
        let mut size = 0;
        while let Some(idx) = queue.pop_front() {
            size += 1;
            let (x, y) = (idx % w, idx / w);
            let mut visit = |n: usize| {
                if mask.bits()[n] && label[n] == 0 {
                    label[n] = next;
                    queue.push_back(n);
                }
            };
            if x > 0 {
                visit(idx - 1);
            }
            if x + 1 < w {
                visit(idx + 1);
            }
            if y > 0 {
                visit(idx - w);
            }
            if y + 1 < h {
                visit(idx + w);
            }
        }
        if size > best.1 {
            best = (next, size);
        }
    }
    BinaryMask::from_fn(w, h, |x, y| best.0 != 0 && label[y * w + x] == best.0)
}
