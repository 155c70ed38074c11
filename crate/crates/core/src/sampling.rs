//! Seedable space-filling and uniform designs over a box.
//!
//! All randomness in the crate flows through [`rng_from_seed`], a ChaCha8
//! stream generator. ChaCha8 output is specified bit-for-bit and independent
//! of platform endianness or word size, so every design, trace and GA run is
//! reproducible from its 64-bit seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The generator used for every stochastic routine in the crate.
pub type SeedRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mix a stream index into a base seed with the SplitMix64 finalizer.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Axis-aligned box `lower <= x <= upper` with `lower[j] < upper[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::Config(
                "bounds must have at least one dimension".into(),
            ));
        }
        if lower.len() != upper.len() {
            return Err(Error::Config(format!(
                "bounds dimension mismatch: {} lower vs {} upper",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::Config(format!("bounds[{j}] must be finite")));
            }
            if l >= u {
                return Err(Error::Config(format!(
                    "bounds[{j}]: lower {l} must be strictly below upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The unit cube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| l <= v && v <= u)
    }

    /// Clip `x` into the box componentwise.
    pub fn clamp(&self, x: &mut [f64]) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[j], self.upper[j]);
        }
    }

    /// Map a point of the unit cube back into this box.
    pub fn from_unit(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .enumerate()
            .map(|(j, &t)| {
                let v = self.lower[j] + t * self.width(j);
                v.clamp(self.lower[j], self.upper[j])
            })
            .collect()
    }

    /// Map a point of this box into the unit cube, without range checks.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| (v - self.lower[j]) / self.width(j))
            .collect()
    }
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    Ok(())
}

/// Latin hypercube design of `n` points: in every dimension each of the `n`
/// equal-width strata `[l + k w/n, l + (k+1) w/n)` holds exactly one point.
pub fn latin_hypercube(n: usize, bounds: &Bounds, seed: u64) -> Result<Vec<Vec<f64>>> {
    check_count(n)?;
    let mut rng = rng_from_seed(seed);
    let d = bounds.dim();
    let mut points = vec![vec![0.0; d]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..d {
        strata.shuffle(&mut rng);
        let (lo, w) = (bounds.lower[j], bounds.width(j));
        for (point, &k) in points.iter_mut().zip(&strata) {
            let u: f64 = rng.random();
            let stratum_lo = lo + w * (k as f64) / (n as f64);
            let stratum_hi = lo + w * ((k + 1) as f64) / (n as f64);
            let v = lo + w * (k as f64 + u) / (n as f64);
            // Rounding may push v onto the open upper edge of its stratum.
            point[j] = if v >= stratum_hi {
                stratum_hi.next_down().max(stratum_lo)
            } else {
                v.max(stratum_lo)
            };
        }
    }
    Ok(points)
}

/// `n` independent uniform draws in the box.
pub fn uniform_box(n: usize, bounds: &Bounds, seed: u64) -> Result<Vec<Vec<f64>>> {
    check_count(n)?;
    let mut rng = rng_from_seed(seed);
    Ok((0..n).map(|_| uniform_point(bounds, &mut rng)).collect())
}

pub(crate) fn uniform_point(bounds: &Bounds, rng: &mut SeedRng) -> Vec<f64> {
    (0..bounds.dim())
        .map(|j| {
            let u: f64 = rng.random();
            (bounds.lower[j] + u * bounds.width(j)).min(bounds.upper[j])
        })
        .collect()
}
