//! Combined spatial-temporal entropy.
//!
//! For a candidate `x` and existing samples `x_1..x_N`, all mapped into the
//! unit cube,
//!
//! ```text
//! beta(x) = 1 / sum_n |x - x_n|^-2          (0 at a sample, clamped to <= 1)
//! dH(x)   = -beta(x) ln beta(x)             (0 ln 0 = 0)
//! a(x)    = s(x) - alpha dH(x)
//! ```
//!
//! `dH` is zero on existing samples and grows in the gaps between them. When
//! samples are added one at a time, the running sum of `dH` depends on the
//! order, which is what the ordering utilities below measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kriging::{KrigingModel, SampleSet};
use crate::sampling::Bounds;

/// Default distance, in unit-cube coordinates, under which a candidate is
/// treated as coinciding with a sample.
pub const DEFAULT_COINCIDENCE_EPS: f64 = 1e-12;

/// Exploration weight and coincidence threshold for the acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyConfig {
    /// Weight of the entropy term, in objective units.
    pub alpha: f64,
    #[serde(default = "default_eps")]
    pub coincidence_eps: f64,
}

fn default_eps() -> f64 {
    DEFAULT_COINCIDENCE_EPS
}

impl EntropyConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            coincidence_eps: DEFAULT_COINCIDENCE_EPS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.coincidence_eps > 0.0) {
            return Err(Error::Config("coincidence_eps must be positive".into()));
        }
        Ok(())
    }
}

impl Default for EntropyConfig {
    /// `alpha = 20000`, the weight used for the 6-bus bidding study.
    fn default() -> Self {
        Self {
            alpha: 20_000.0,
            coincidence_eps: DEFAULT_COINCIDENCE_EPS,
        }
    }
}

/// Map `x` from `bounds` into the unit cube.
pub fn scale(x: &[f64], bounds: &Bounds) -> Result<Vec<f64>> {
    if !bounds.contains(x) {
        return Err(Error::Usage(format!("point {x:?} outside bounds")));
    }
    Ok(bounds.to_unit(x))
}

pub fn scaled_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Inverse-sum-of-inverse-squared-distances weight of a scaled point.
pub fn beta(x_scaled: &[f64], samples_scaled: &[Vec<f64>], coincidence_eps: f64) -> Result<f64> {
    if samples_scaled.is_empty() {
        return Err(Error::Usage("beta needs at least one sample".into()));
    }
    if let Some(s) = samples_scaled.iter().find(|s| s.len() != x_scaled.len()) {
        return Err(Error::Usage(format!(
            "dimension mismatch: point {} vs sample {}",
            x_scaled.len(),
            s.len()
        )));
    }
    Ok(beta_from_sq_dists(
        samples_scaled.iter().map(|s| {
            s.iter()
                .zip(x_scaled)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        }),
        coincidence_eps,
    ))
}

fn beta_from_sq_dists(sq_dists: impl Iterator<Item = f64>, coincidence_eps: f64) -> f64 {
    let eps2 = coincidence_eps * coincidence_eps;
    let mut inv_sum = 0.0;
    for d2 in sq_dists {
        if d2 < eps2 {
            return 0.0;
        }
        inv_sum += 1.0 / d2;
    }
    (1.0 / inv_sum).min(1.0)
}

/// `-b ln b` with `0 ln 0 = 0`.
pub fn neg_b_log_b(b: f64) -> f64 {
    if b <= 0.0 || b >= 1.0 {
        0.0
    } else {
        -b * b.ln()
    }
}

/// Entropy increment of adding `x` to `samples`.
pub fn delta_entropy(x: &[f64], samples: &SampleSet, coincidence_eps: f64) -> Result<f64> {
    let bounds = samples.bounds();
    if !bounds.contains(x) {
        return Err(Error::Usage(format!("point {x:?} outside bounds")));
    }
    if samples.is_empty() {
        return Err(Error::Usage(
            "entropy increment needs at least one sample".into(),
        ));
    }
    Ok(delta_entropy_unchecked(
        x,
        samples.points(),
        bounds,
        coincidence_eps,
    ))
}

pub(crate) fn delta_entropy_unchecked(
    x: &[f64],
    points: &[Vec<f64>],
    bounds: &Bounds,
    coincidence_eps: f64,
) -> f64 {
    let (lo, up) = (bounds.lower(), bounds.upper());
    let sq = points.iter().map(|p| {
        let mut s = 0.0;
        for j in 0..x.len() {
            let t = (p[j] - x[j]) / (up[j] - lo[j]);
            s += t * t;
        }
        s
    });
    neg_b_log_b(beta_from_sq_dists(sq, coincidence_eps))
}

/// Shannon entropy `-sum p ln p` of a (sub)probability vector.
pub fn shannon_entropy(probabilities: &[f64]) -> Result<f64> {
    if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0)) {
        return Err(Error::Usage(format!("negative probability {p}")));
    }
    let total: f64 = probabilities.iter().sum();
    if total > 1.0 + 1e-9 {
        return Err(Error::Usage(format!("probabilities sum to {total} > 1")));
    }
    Ok(probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum())
}

/// Running totals of the entropy increments when `ordering` is sampled in
/// sequence. The first point has no predecessors and contributes 0.
pub fn cumulative_entropy(ordering: &[Vec<f64>], bounds: &Bounds) -> Result<Vec<f64>> {
    if ordering.is_empty() {
        return Err(Error::Usage(
            "ordering must contain at least one point".into(),
        ));
    }
    if let Some(p) = ordering.iter().find(|p| !bounds.contains(p)) {
        return Err(Error::Usage(format!("point {p:?} outside bounds")));
    }
    let mut totals = Vec::with_capacity(ordering.len());
    let mut acc = 0.0;
    totals.push(acc);
    for k in 1..ordering.len() {
        acc += delta_entropy_unchecked(
            &ordering[k],
            &ordering[..k],
            bounds,
            DEFAULT_COINCIDENCE_EPS,
        );
        totals.push(acc);
    }
    Ok(totals)
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n)
            .rev()
            .find(|&j| current[j] > current[i - 1])
            .expect("pivot has a successor");
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

/// Greedy ordering: start from the first point, then repeatedly append the
/// remaining point with the largest entropy increment (lowest index on ties).
/// Returns the permutation as indices into `points`.
pub fn greedy_order(points: &[Vec<f64>], bounds: &Bounds) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(Error::Usage(
            "greedy ordering needs at least one point".into(),
        ));
    }
    if let Some(p) = points.iter().find(|p| !bounds.contains(p)) {
        return Err(Error::Usage(format!("point {p:?} outside bounds")));
    }
    let mut order = vec![0];
    let mut placed = vec![points[0].clone()];
    let mut remaining: Vec<usize> = (1..points.len()).collect();
    while !remaining.is_empty() {
        let mut best = (0, f64::NEG_INFINITY);
        for (slot, &i) in remaining.iter().enumerate() {
            let gain =
                delta_entropy_unchecked(&points[i], &placed, bounds, DEFAULT_COINCIDENCE_EPS);
            if gain > best.1 {
                best = (slot, gain);
            }
        }
        let i = remaining.remove(best.0);
        order.push(i);
        placed.push(points[i].clone());
    }
    Ok(order)
}

/// Acquisition `a(x) = s(x) - alpha dH(x)` over the model's own samples.
pub fn acquisition(model: &KrigingModel, x: &[f64], cfg: &EntropyConfig) -> Result<f64> {
    let samples = model.samples();
    if !samples.bounds().contains(x) {
        return Err(Error::Usage(format!("point {x:?} outside model bounds")));
    }
    Ok(acquisition_unchecked(model, x, cfg))
}

pub(crate) fn acquisition_unchecked(model: &KrigingModel, x: &[f64], cfg: &EntropyConfig) -> f64 {
    let s = model.predict_unchecked(x);
    if cfg.alpha == 0.0 {
        return s;
    }
    let samples = model.samples();
    s - cfg.alpha
        * delta_entropy_unchecked(x, samples.points(), samples.bounds(), cfg.coincidence_eps)
}
