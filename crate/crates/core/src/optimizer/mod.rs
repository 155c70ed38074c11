//! Black-box minimization over a box: the Kriging/entropy surrogate loop,
//! derivative-free baselines and exhaustive grid enumeration.
//!
//! Every method minimizes. All of them report the best *evaluated* point and
//! record each evaluation in a [`RunTrace`].

mod baselines;
mod grid;
mod surrogate;

use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::entropy::EntropyConfig;
use crate::error::{Error, Result};
use crate::kriging::KernelHyper;
use crate::sampling::Bounds;

pub use baselines::{
    genetic_algorithm, genetic_algorithm_with, pattern_search, random_search, GaConfig,
};
pub use grid::{grid_enumerate, GridResult, MAX_GRID_POINTS};
pub use surrogate::{minimize_acquisition, surrogate_optimize};

type EvalFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;

/// A deterministic black-box function on a box.
#[derive(Clone)]
pub struct Objective {
    bounds: Bounds,
    reentrant: bool,
    f: Arc<EvalFn>,
}

impl Objective {
    /// Objective that may be evaluated from several threads at once.
    pub fn new<F>(bounds: Bounds, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        Self {
            bounds,
            reentrant: true,
            f: Arc::new(f),
        }
    }

    /// Objective whose evaluations are always serialized.
    pub fn serial<F>(bounds: Bounds, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        Self {
            bounds,
            reentrant: false,
            f: Arc::new(f),
        }
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn is_reentrant(&self) -> bool {
        self.reentrant
    }

    /// Evaluate at an in-box point. Non-finite values are errors.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.bounds.dim() || !self.bounds.contains(x) {
            return Err(Error::Usage(format!(
                "point {x:?} outside the objective's box"
            )));
        }
        let v = (self.f)(x)?;
        if !v.is_finite() {
            return Err(Error::Numerical(format!("objective returned {v} at {x:?}")));
        }
        Ok(v)
    }
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("bounds", &self.bounds)
            .field("reentrant", &self.reentrant)
            .finish_non_exhaustive()
    }
}

/// Multi-start compass search settings for minimizing the acquisition.
/// Steps are in unit-cube coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerSearchConfig {
    pub n_starts: usize,
    pub max_iters: usize,
    pub init_step: f64,
    pub shrink: f64,
    pub min_step: f64,
}

impl Default for InnerSearchConfig {
    fn default() -> Self {
        Self {
            n_starts: 20,
            max_iters: 200,
            init_step: 0.25,
            shrink: 0.5,
            min_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Size of the initial Latin hypercube design.
    pub n_init: usize,
    /// Total evaluation budget, initial design included.
    pub n_max: usize,
    pub hyper: KernelHyper,
    pub entropy: EntropyConfig,
    pub seed: u64,
    pub inner: InnerSearchConfig,
    /// Minimum spacing between samples, in unit-cube coordinates.
    pub dup_tol: f64,
    /// Fill the trace's `ms` column with wall-clock time. Off by default so
    /// traces are byte-reproducible.
    pub record_timing: bool,
}

impl OptimizerConfig {
    /// Defaults for a `dim`-dimensional problem: `n_init = max(2(d+1), 10)`
    /// capped at `n_max`, `upsilon = 1`, `w = 1.5`, `alpha = 20000`.
    pub fn new(dim: usize, n_max: usize, seed: u64) -> Self {
        Self {
            n_init: default_n_init(dim).min(n_max.max(2)),
            n_max,
            hyper: KernelHyper::default_for(dim),
            entropy: EntropyConfig::default(),
            seed,
            inner: InnerSearchConfig::default(),
            dup_tol: 1e-6,
            record_timing: false,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_init < 2 {
            return bad(format!("n_init must be at least 2, got {}", self.n_init));
        }
        if self.n_max < self.n_init {
            return bad(format!(
                "n_max ({}) must be at least n_init ({})",
                self.n_max, self.n_init
            ));
        }
        KernelHyper::new(self.hyper.upsilon().to_vec(), self.hyper.w().to_vec())?;
        if self.hyper.dim() != dim {
            return bad(format!(
                "kernel has {} dimensions, problem has {dim}",
                self.hyper.dim()
            ));
        }
        self.entropy.validate()?;
        let inner = &self.inner;
        if inner.n_starts == 0 || inner.max_iters == 0 {
            return bad("inner search needs n_starts and max_iters >= 1".into());
        }
        if !(inner.init_step > 0.0 && inner.min_step > 0.0) {
            return bad("inner search steps must be positive".into());
        }
        if !(inner.shrink > 0.0 && inner.shrink < 1.0) {
            return bad(format!(
                "inner.shrink must lie in (0, 1), got {}",
                inner.shrink
            ));
        }
        if !(self.dup_tol > 0.0 && self.dup_tol < 1.0) {
            return bad(format!("dup_tol must lie in (0, 1), got {}", self.dup_tol));
        }
        Ok(())
    }
}

pub fn default_n_init(dim: usize) -> usize {
    (2 * (dim + 1)).max(10)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based evaluation index.
    pub iter: usize,
    pub point: Vec<f64>,
    pub f: f64,
    pub best_f: f64,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub method: String,
    pub seed: Option<u64>,
    pub dim: usize,
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn new(method: &str, seed: Option<u64>, dim: usize) -> Self {
        Self {
            method: method.to_string(),
            seed,
            dim,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Best record, earliest on ties.
    pub fn best(&self) -> Option<&TraceRecord> {
        self.records
            .iter()
            .fold(None, |acc: Option<&TraceRecord>, r| match acc {
                Some(b) if b.f <= r.f => Some(b),
                _ => Some(r),
            })
    }

    /// CSV with header `iter,method,x1,...,xd,f,best_f,ms`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,method");
        for j in 1..=self.dim {
            let _ = write!(out, ",x{j}");
        }
        out.push_str(",f,best_f,ms\n");
        for r in &self.records {
            let _ = write!(out, "{},{}", r.iter, self.method);
            for v in &r.point {
                let _ = write!(out, ",{}", fmt_num(*v));
            }
            let _ = writeln!(
                out,
                ",{},{},{}",
                fmt_num(r.f),
                fmt_num(r.best_f),
                fmt_num(r.ms)
            );
        }
        out
    }
}

/// Scientific notation with 13 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.12e}")
}

/// Best evaluated point and the trace that produced it.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub trace: RunTrace,
}

/// Budgeted evaluator that records every call.
pub(crate) struct Recorder<'a> {
    objective: &'a Objective,
    trace: RunTrace,
    budget: usize,
    best: Option<(Vec<f64>, f64)>,
    start: Option<Instant>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(
        objective: &'a Objective,
        method: &str,
        seed: Option<u64>,
        budget: usize,
        timing: bool,
    ) -> Self {
        Self {
            objective,
            trace: RunTrace::new(method, seed, objective.bounds().dim()),
            budget,
            best: None,
            start: timing.then(Instant::now),
        }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.budget - self.trace.len()
    }

    pub(crate) fn evaluate(&mut self, x: Vec<f64>) -> Result<f64> {
        assert!(self.remaining() > 0, "evaluation budget exhausted");
        let out = self.objective.evaluate(&x);
        self.accept(x, out)
    }

    /// Evaluate a batch, concurrently when the objective allows it. Results
    /// are recorded in input order.
    pub(crate) fn evaluate_batch(&mut self, xs: Vec<Vec<f64>>) -> Result<Vec<f64>> {
        assert!(xs.len() <= self.remaining(), "evaluation budget exhausted");
        let outs: Vec<Result<f64>> = if self.objective.is_reentrant() {
            use rayon::prelude::*;
            xs.par_iter().map(|x| self.objective.evaluate(x)).collect()
        } else {
            xs.iter().map(|x| self.objective.evaluate(x)).collect()
        };
        xs.into_iter()
            .zip(outs)
            .map(|(x, out)| self.accept(x, out))
            .collect()
    }

    fn accept(&mut self, x: Vec<f64>, out: Result<f64>) -> Result<f64> {
        let f = match out {
            Ok(f) => f,
            Err(e) => {
                return Err(Error::Evaluation {
                    point: x,
                    message: e.to_string(),
                    trace: Box::new(self.trace.clone()),
                })
            }
        };
        if self.best.as_ref().is_none_or(|b| f < b.1) {
            self.best = Some((x.clone(), f));
        }
        let ms = self.start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);
        self.trace.records.push(TraceRecord {
            iter: self.trace.len() + 1,
            point: x,
            f,
            best_f: self.best.as_ref().map_or(f, |b| b.1),
            ms,
        });
        Ok(f)
    }

    pub(crate) fn finish(self) -> Result<OptimizationResult> {
        let (best_point, best_value) = self
            .best
            .ok_or_else(|| Error::Config("evaluation budget must be at least 1".into()))?;
        Ok(OptimizationResult {
            best_point,
            best_value,
            trace: self.trace,
        })
    }
}
