use rayon::prelude::*;

use super::{OptimizationResult, OptimizerConfig, Recorder};
use crate::entropy::{acquisition_unchecked, delta_entropy_unchecked};
use crate::error::{Error, Result};
use crate::kriging::{KrigingModel, SampleSet};
use crate::optimizer::{InnerSearchConfig, Objective};
use crate::sampling::{derive_seed, latin_hypercube, rng_from_seed, uniform_point, Bounds};

/// Candidates drawn when the acquisition minimizer lands on a sample.
const ESCAPE_CANDIDATES: usize = 1000;

fn starts_stream(iteration: u64) -> u64 {
    1 + 2 * iteration
}

fn escape_stream(iteration: u64) -> u64 {
    2 + 2 * iteration
}

/// Minimize `f` from `x0` by compass search inside the unit cube.
fn compass_descent<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: Vec<f64>,
    inner: &InnerSearchConfig,
) -> (Vec<f64>, f64) {
    let mut x = x0;
    let mut fx = f(&x);
    let mut step = inner.init_step;
    for _ in 0..inner.max_iters {
        if step < inner.min_step {
            break;
        }
        let mut improved = false;
        'poll: for j in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[j] = (y[j] + sign * step).clamp(0.0, 1.0);
                if y[j] == x[j] {
                    continue;
                }
                let fy = f(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break 'poll;
                }
            }
        }
        if !improved {
            step *= inner.shrink;
        }
    }
    (x, fx)
}

/// Uniform candidate with the largest entropy increment that keeps
/// `dup_tol` clearance from every sample.
fn entropy_escape(samples: &SampleSet, cfg: &OptimizerConfig, iteration: u64) -> Vec<f64> {
    let bounds = samples.bounds();
    let mut rng = rng_from_seed(derive_seed(cfg.seed, escape_stream(iteration)));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..ESCAPE_CANDIDATES {
        let c = uniform_point(bounds, &mut rng);
        if samples
            .nearest_scaled(&c)
            .is_some_and(|(_, d)| d < cfg.dup_tol)
        {
            continue;
        }
        let h = delta_entropy_unchecked(&c, samples.points(), bounds, cfg.entropy.coincidence_eps);
        if best.as_ref().is_none_or(|b| h > b.1) {
            best = Some((c, h));
        }
    }
    best.map_or_else(|| uniform_point(bounds, &mut rng), |b| b.0)
}

/// Next point to evaluate: the minimizer of `s(x) - alpha dH(x)` found by
/// compass search from the best sample and `n_starts - 1` Latin hypercube
/// starts. Falls back to an entropy-maximizing random candidate when the
/// winner is within `dup_tol` of a sample. `iteration` selects the random
/// streams, so equal inputs give equal outputs.
pub fn minimize_acquisition(
    model: &KrigingModel,
    cfg: &OptimizerConfig,
    iteration: u64,
) -> Vec<f64> {
    let samples = model.samples();
    let bounds = samples.bounds();
    let unit = Bounds::unit(bounds.dim()).expect("model dimension is at least 1");
    let n_starts = cfg.inner.n_starts.max(1);
    let mut starts = Vec::with_capacity(n_starts);
    if let Some(b) = samples.best_index() {
        starts.push(bounds.to_unit(&samples.points()[b]));
    }
    if n_starts > starts.len() {
        let extra = latin_hypercube(
            n_starts - starts.len(),
            &unit,
            derive_seed(cfg.seed, starts_stream(iteration)),
        )
        .expect("start count is positive");
        starts.extend(extra);
    }
    let a = |u: &[f64]| acquisition_unchecked(model, &bounds.from_unit(u), &cfg.entropy);
    let finals: Vec<(Vec<f64>, f64)> = starts
        .into_par_iter()
        .map(|s| compass_descent(&a, s, &cfg.inner))
        .collect();
    let winner = finals
        .into_iter()
        .reduce(|best, c| if c.1 < best.1 { c } else { best })
        .expect("at least one start");
    let x = bounds.from_unit(&winner.0);
    match samples.nearest_scaled(&x) {
        Some((_, d)) if d < cfg.dup_tol => entropy_escape(samples, cfg, iteration),
        _ => x,
    }
}

/// Kriging surrogate optimization with entropy-weighted exploration.
///
/// Evaluates an `n_init` Latin hypercube design, then repeatedly fits the
/// surrogate, evaluates the acquisition minimizer and adds it to the sample
/// set until `n_max` evaluations have been spent. The surrogate lives in
/// unit-cube coordinates; the objective sees points in its own box.
pub fn surrogate_optimize(
    objective: &Objective,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    let raw = objective.bounds().clone();
    let d = raw.dim();
    cfg.validate(d)?;
    let unit = Bounds::unit(d)?;
    let mut rec = Recorder::new(
        objective,
        "surrogate",
        Some(cfg.seed),
        cfg.n_max,
        cfg.record_timing,
    );

    let design = latin_hypercube(cfg.n_init, &unit, derive_seed(cfg.seed, 0))?;
    let values = rec.evaluate_batch(design.iter().map(|u| raw.from_unit(u)).collect())?;
    let mut samples = SampleSet::new(unit);
    for (u, f) in design.into_iter().zip(values) {
        // A point closer than dup_tol to an earlier one is kept in the trace only.
        let _ = samples.push(u, f, cfg.dup_tol);
    }

    let mut iteration = 0u64;
    while rec.remaining() > 0 {
        let next = match KrigingModel::fit(&samples, &cfg.hyper) {
            Ok(model) => minimize_acquisition(&model, cfg, iteration),
            Err(Error::Conditioning { .. }) => entropy_escape(&samples, cfg, iteration),
            Err(e) => return Err(e),
        };
        let f = rec.evaluate(raw.from_unit(&next))?;
        let _ = samples.push(next, f, cfg.dup_tol);
        iteration += 1;
    }
    rec.finish()
}
