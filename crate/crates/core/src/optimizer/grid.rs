use rayon::prelude::*;

use super::{Objective, RunTrace, TraceRecord};
use crate::error::{Error, Result};

/// Refuse grids with more points than this.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    /// Every grid evaluation in lexicographic order.
    pub trace: RunTrace,
}

/// Evaluate the full uniform grid with `points_per_dim` nodes per axis,
/// endpoints included, and return its minimizer. Values within `1e-9`
/// relative of each other count as ties, resolved toward the
/// lexicographically smallest point.
pub fn grid_enumerate(objective: &Objective, points_per_dim: usize) -> Result<GridResult> {
    if points_per_dim < 2 {
        return Err(Error::Usage(format!(
            "grid needs at least 2 points per axis, got {points_per_dim}"
        )));
    }
    let bounds = objective.bounds();
    let d = bounds.dim();
    let total = (0..d).try_fold(1usize, |acc, _| acc.checked_mul(points_per_dim));
    let total = match total {
        Some(t) if t <= MAX_GRID_POINTS => t,
        _ => {
            return Err(Error::Usage(format!(
                "grid of {points_per_dim}^{d} points exceeds the limit of {MAX_GRID_POINTS}"
            )))
        }
    };
    // Index order is lexicographic order: axis 0 varies slowest.
    let point = |mut k: usize| {
        let mut unit = vec![0.0; d];
        for j in (0..d).rev() {
            unit[j] = (k % points_per_dim) as f64 / (points_per_dim - 1) as f64;
            k /= points_per_dim;
        }
        bounds.from_unit(&unit)
    };
    let values: Vec<Result<f64>> = if objective.is_reentrant() {
        (0..total)
            .into_par_iter()
            .map(|k| objective.evaluate(&point(k)))
            .collect()
    } else {
        (0..total).map(|k| objective.evaluate(&point(k))).collect()
    };
    let mut best: Option<(usize, f64)> = None;
    let mut trace = RunTrace::new("enumerate", None, d);
    let mut running = f64::INFINITY;
    for (k, v) in values.into_iter().enumerate() {
        let v = v?;
        running = running.min(v);
        trace.records.push(TraceRecord {
            iter: k + 1,
            point: point(k),
            f: v,
            best_f: running,
            ms: 0.0,
        });
        let better = match best {
            None => true,
            Some((_, b)) => v < b - 1e-9 * b.abs().max(1.0),
        };
        if better {
            best = Some((k, v));
        }
    }
    let (k, best_value) = best.expect("grid is nonempty");
    Ok(GridResult {
        best_point: point(k),
        best_value,
        evaluations: total,
        trace,
    })
}
