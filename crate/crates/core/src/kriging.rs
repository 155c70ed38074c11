//! Ordinary Kriging with a fixed power-exponential correlation kernel
//!
//! ```text
//! corr(x, y) = exp(-sum_j upsilon_j |x_j - y_j|^w_j)
//! s(x)       = mu + r(x)^T R^-1 (f - 1 mu)
//! ```
//!
//! where `mu` and the process variance are the closed-form likelihood
//! estimates for the given kernel. Hyperparameters are not estimated.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::Bounds;

/// Jitter ladder tried in order when factorizing the correlation matrix.
pub const JITTER_LADDER: [f64; 8] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

/// Smallest accepted squared Cholesky pivot. The correlation matrix has a
/// unit diagonal, so pivots below this mean the factor is numerically useless.
const MIN_PIVOT: f64 = 1e-13;

/// Per-dimension kernel parameters: activity `upsilon_j > 0` and smoothness
/// exponent `w_j` in `(0, 2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelHyper {
    upsilon: Vec<f64>,
    w: Vec<f64>,
}

impl KernelHyper {
    pub fn new(upsilon: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if upsilon.is_empty() || upsilon.len() != w.len() {
            return Err(Error::Config(format!(
                "kernel hyperparameters need equal nonzero lengths, got {} and {}",
                upsilon.len(),
                w.len()
            )));
        }
        if let Some(j) = upsilon.iter().position(|&u| !(u > 0.0 && u.is_finite())) {
            return Err(Error::Config(format!("upsilon[{j}] must be positive")));
        }
        if let Some(j) = w.iter().position(|&e| !(e > 0.0 && e <= 2.0)) {
            return Err(Error::Config(format!("w[{j}] must lie in (0, 2]")));
        }
        Ok(Self { upsilon, w })
    }

    /// Same `(upsilon, w)` in every dimension.
    pub fn isotropic(dim: usize, upsilon: f64, w: f64) -> Result<Self> {
        Self::new(vec![upsilon; dim], vec![w; dim])
    }

    /// `upsilon = 1`, `w = 1.5` in every dimension.
    pub fn default_for(dim: usize) -> Self {
        Self::isotropic(dim, 1.0, 1.5).expect("default hyperparameters are valid")
    }

    pub fn dim(&self) -> usize {
        self.upsilon.len()
    }

    pub fn upsilon(&self) -> &[f64] {
        &self.upsilon
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    #[inline]
    fn corr_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for j in 0..x.len() {
            let h = (x[j] - y[j]).abs();
            if h > 0.0 {
                s += self.upsilon[j] * h.powf(self.w[j]);
            }
        }
        (-s).exp()
    }
}

/// Correlation between two points under the power-exponential kernel.
pub fn correlation(x: &[f64], y: &[f64], hyper: &KernelHyper) -> Result<f64> {
    if x.len() != y.len() || x.len() != hyper.dim() {
        return Err(Error::Usage(format!(
            "correlation dimension mismatch: {} / {} / kernel {}",
            x.len(),
            y.len(),
            hyper.dim()
        )));
    }
    Ok(hyper.corr_unchecked(x, y))
}

/// Ordered evaluated points. Order is significant for the entropy term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    bounds: Bounds,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(bounds: Bounds) -> Self {
        Self {
            bounds,
            points: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Build from parallel lists, enforcing the minimum scaled spacing.
    pub fn from_parts(
        bounds: Bounds,
        points: Vec<Vec<f64>>,
        values: Vec<f64>,
        dup_tol: f64,
    ) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::Usage(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        let mut set = Self::new(bounds);
        for (p, v) in points.into_iter().zip(values) {
            set.push(p, v, dup_tol)?;
        }
        Ok(set)
    }

    /// Append a sample. Rejects out-of-box points and points closer than
    /// `dup_tol` (Euclidean, in unit-cube coordinates) to an existing sample.
    pub fn push(&mut self, point: Vec<f64>, value: f64, dup_tol: f64) -> Result<()> {
        if !self.bounds.contains(&point) {
            return Err(Error::Usage(format!("sample {point:?} outside bounds")));
        }
        if !value.is_finite() {
            return Err(Error::Usage(format!("non-finite value at {point:?}")));
        }
        if let Some((n, dist)) = self.nearest_scaled(&point) {
            if dist < dup_tol {
                return Err(Error::Usage(format!(
                    "sample {point:?} within {dist:e} of sample {n} (dup_tol {dup_tol:e})"
                )));
            }
        }
        self.points.push(point);
        self.values.push(value);
        Ok(())
    }

    /// Index of, and scaled distance to, the closest stored sample.
    pub fn nearest_scaled(&self, x: &[f64]) -> Option<(usize, f64)> {
        let xs = self.bounds.to_unit(x);
        self.points
            .iter()
            .map(|p| {
                let ps = self.bounds.to_unit(p);
                ps.iter()
                    .zip(&xs)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// Index of the smallest value (first one on ties).
    pub fn best_index(&self) -> Option<usize> {
        self.values
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, f64)>, (i, &v)| match acc {
                Some((_, b)) if b <= v => acc,
                _ => Some((i, v)),
            })
            .map(|(i, _)| i)
    }
}

/// A fitted, immutable Kriging surrogate.
#[derive(Debug, Clone)]
pub struct KrigingModel {
    hyper: KernelHyper,
    samples: SampleSet,
    mu_hat: f64,
    sigma2_hat: f64,
    factor: Cholesky<f64, Dyn>,
    weights: DVector<f64>,
    jitter_used: f64,
}

impl KrigingModel {
    /// Fit the surrogate to `samples` with fixed kernel hyperparameters.
    ///
    /// The correlation matrix is Cholesky-factorized with the smallest jitter
    /// from [`JITTER_LADDER`] that yields usable pivots.
    pub fn fit(samples: &SampleSet, hyper: &KernelHyper) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::Usage(format!(
                "Kriging needs at least 2 samples, got {n}"
            )));
        }
        if hyper.dim() != samples.dim() {
            return Err(Error::Usage(format!(
                "kernel dimension {} does not match sample dimension {}",
                hyper.dim(),
                samples.dim()
            )));
        }
        let pts = samples.points();
        let r = DMatrix::from_fn(n, n, |a, b| {
            if a == b {
                1.0
            } else {
                hyper.corr_unchecked(&pts[a], &pts[b])
            }
        });

        let (factor, jitter_used) = JITTER_LADDER
            .iter()
            .find_map(|&jitter| {
                let mut m = r.clone();
                for k in 0..n {
                    m[(k, k)] += jitter;
                }
                let chol = Cholesky::new(m)?;
                let l = chol.l_dirty();
                let ok = (0..n).all(|k| l[(k, k)] * l[(k, k)] >= MIN_PIVOT);
                ok.then_some((chol, jitter))
            })
            .ok_or_else(|| {
                let (mut first, mut second, mut correlation) = (0, 1, f64::NEG_INFINITY);
                for a in 0..n {
                    for b in a + 1..n {
                        if r[(a, b)] > correlation {
                            (first, second, correlation) = (a, b, r[(a, b)]);
                        }
                    }
                }
                Error::Conditioning {
                    first,
                    second,
                    correlation,
                    max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
                }
            })?;

        let f = DVector::from_column_slice(samples.values());
        let ones = DVector::from_element(n, 1.0);
        let rinv_f = factor.solve(&f);
        let rinv_1 = factor.solve(&ones);
        let mu_hat = ones.dot(&rinv_f) / ones.dot(&rinv_1);
        let resid = &f - &ones * mu_hat;
        let weights = factor.solve(&resid);
        let sigma2_hat = (resid.dot(&weights) / n as f64).max(0.0);

        Ok(Self {
            hyper: hyper.clone(),
            samples: samples.clone(),
            mu_hat,
            sigma2_hat,
            factor,
            weights,
            jitter_used,
        })
    }

    /// Surrogate prediction `s(x)`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.hyper.dim() {
            return Err(Error::Usage(format!(
                "prediction point has dimension {}, model has {}",
                x.len(),
                self.hyper.dim()
            )));
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        self.samples
            .points()
            .iter()
            .zip(self.weights.iter())
            .fold(self.mu_hat, |acc, (p, w)| {
                acc + w * self.hyper.corr_unchecked(x, p)
            })
    }

    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    /// Likelihood estimate of the process variance.
    pub fn sigma2_hat(&self) -> f64 {
        self.sigma2_hat
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn hyper(&self) -> &KernelHyper {
        &self.hyper
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    /// `R^-1 (f - 1 mu)`.
    pub fn weights(&self) -> &[f64] {
        self.weights.as_slice()
    }

    /// Solve `(R + jitter I) v = rhs` with the stored factorization.
    pub fn solve_correlation(&self, rhs: &[f64]) -> Vec<f64> {
        self.factor
            .solve(&DVector::from_column_slice(rhs))
            .as_slice()
            .to_vec()
    }
}
