//! Fitting affine bounds `step * size + base` to measured costs.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("no measurements")]
    Empty,
    #[error("measurements are not affine: slack {slack} at size {size} exceeds {tolerance}")]
    NonAffine { size: u64, slack: u64, tolerance: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AffineBound {
    pub step: u64,
    pub base: i64,
    /// Largest gap between the bound and a measurement.
    pub max_slack: u64,
}

impl AffineBound {
    pub fn at(&self, size: u64) -> i128 {
        self.step as i128 * size as i128 + self.base as i128
    }
}

/// The affine function with non-negative integer step that dominates every
/// sample and has the least total over the sampled sizes. Fails with
/// `NonAffine` if some sample lies more than `tolerance` below the bound.
pub fn measure_constants(samples: &[(u64, u64)], tolerance: u64) -> Result<AffineBound, MeasureError> {
    let mut worst: BTreeMap<u64, u64> = BTreeMap::new();
    for (x, y) in samples {
        let e = worst.entry(*x).or_insert(0);
        *e = (*e).max(*y);
    }
    if worst.is_empty() {
        return Err(MeasureError::Empty);
    }
    let pts: Vec<(i128, i128)> = worst.iter().map(|(x, y)| (*x as i128, *y as i128)).collect();
    let mut steps = vec![0i128];
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            if dy > 0 {
                steps.push(dy / dx);
                steps.push((dy + dx - 1) / dx);
            }
        }
    }
    steps.sort_unstable();
    steps.dedup();
    let fit = |s: i128| {
        let base = pts.iter().map(|(x, y)| y - s * x).max().unwrap();
        let total: i128 = pts.iter().map(|(x, _)| s * x + base).sum();
        (total, s, base)
    };
    let (_, step, base) = steps.into_iter().map(fit).min().unwrap();
    let mut max_slack = 0;
    for (x, y) in &pts {
        let slack = (step * x + base - y) as u64;
        if slack > tolerance {
            return Err(MeasureError::NonAffine { size: *x as u64, slack, tolerance });
        }
        max_slack = max_slack.max(slack);
    }
    Ok(AffineBound { step: step as u64, base: base as i64, max_slack })
}
