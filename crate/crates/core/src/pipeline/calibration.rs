//! Bagged isotonic calibration.
//!
//! Bag `b` resamples `n` records with replacement using a ChaCha8 generator
//! seeded with the `b`-th `u64` drawn from a ChaCha8 generator seeded with the
//! master seed. Each bag is a pool-adjacent-violators fit; predictions
//! interpolate linearly between knots, clamp outside them, and are averaged
//! over bags.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::exec::Execution;

pub const DEFAULT_BAGS: usize = 10;

/// Non-decreasing piecewise-linear map through `(x[i], y[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicMap {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl IsotonicMap {
    pub fn predict(&self, v: f64) -> f64 {
        let last = self.x.len() - 1;
        if v <= self.x[0] {
            return self.y[0];
        }
        if v >= self.x[last] {
            return self.y[last];
        }
        let i = self.x.partition_point(|&k| k <= v);
        let (x0, x1, y0, y1) = (self.x[i - 1], self.x[i], self.y[i - 1], self.y[i]);
        y0 + (v - x0) / (x1 - x0) * (y1 - y0)
    }
}

/// Least-squares non-decreasing fit of `y` on `x`. Records with equal `x` are
/// pooled before the violator pass, so the knots are the distinct `x` values.
pub fn fit_isotonic(x: &[f64], y: &[f64]) -> Result<IsotonicMap, PipelineError> {
    if x.len() != y.len() {
        return Err(PipelineError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(PipelineError::TooFewValues {
            needed: 1,
            found: 0,
        });
    }
    if let Some(&bad) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(PipelineError::NonFinite(bad));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));

    // (knot, sum of y, weight)
    let mut groups: Vec<(f64, f64, f64)> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if g.0 == x[i] => {
                g.1 += y[i];
                g.2 += 1.0;
            }
            _ => groups.push((x[i], y[i], 1.0)),
        }
    }

    // blocks of consecutive groups: (sum, weight, number of groups)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(groups.len());
    for &(_, sum, w) in &groups {
        blocks.push((sum, w, 1));
        while blocks.len() > 1 {
            let (s1, w1, n1) = blocks[blocks.len() - 1];
            let (s0, w0, n0) = blocks[blocks.len() - 2];
            if s0 / w0 <= s1 / w1 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s0 + s1, w0 + w1, n0 + n1);
        }
    }

    let mut fitted = Vec::with_capacity(groups.len());
    for (sum, w, n) in blocks {
        fitted.extend(std::iter::repeat_n(sum / w, n));
    }
    Ok(IsotonicMap {
        x: groups.iter().map(|g| g.0).collect(),
        y: fitted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bag {
    pub seed: u64,
    pub map: IsotonicMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibrator {
    pub seed: u64,
    pub bags: Vec<Bag>,
}

pub fn bag_seeds(master: u64, n_bags: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..n_bags).map(|_| rng.next_u64()).collect()
}

pub fn fit_calibrator(
    scores: &[f64],
    labels: &[bool],
    n_bags: usize,
    seed: u64,
    exec: Execution,
) -> Result<Calibrator, PipelineError> {
    if scores.len() != labels.len() {
        return Err(PipelineError::LengthMismatch(scores.len(), labels.len()));
    }
    if n_bags == 0 {
        return Err(PipelineError::OutOfRange {
            what: "bag count",
            value: 0.0,
        });
    }
    if let Some(&bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(if bad.is_finite() {
            PipelineError::OutOfRange {
                what: "score",
                value: bad,
            }
        } else {
            PipelineError::NonFinite(bad)
        });
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(PipelineError::SingleClass);
    }
    let n = scores.len();
    let seeds = bag_seeds(seed, n_bags);
    let bags = exec.try_map_range(n_bags, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds[b]);
        let (mut x, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let i = rng.random_range(0..n as u64) as usize;
            x.push(scores[i]);
            y.push(if labels[i] { 1.0 } else { 0.0 });
        }
        Ok::<_, PipelineError>(Bag {
            seed: seeds[b],
            map: fit_isotonic(&x, &y)?,
        })
    })?;
    Ok(Calibrator { seed, bags })
}

impl Calibrator {
    pub fn calibrate(&self, score: f64) -> Result<f64, PipelineError> {
        if !score.is_finite() {
            return Err(PipelineError::NonFinite(score));
        }
        let total: f64 = self.bags.iter().map(|b| b.map.predict(score)).sum();
        Ok((total / self.bags.len() as f64).clamp(0.0, 1.0))
    }
}

/// One calibrator per condition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibratorSet {
    pub conditions: BTreeMap<String, Calibrator>,
}

impl CalibratorSet {
    pub fn calibrate(&self, condition: &str, score: f64) -> Result<f64, PipelineError> {
        self.conditions
            .get(condition)
            .ok_or_else(|| PipelineError::UnknownCondition(condition.to_string()))?
            .calibrate(score)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
