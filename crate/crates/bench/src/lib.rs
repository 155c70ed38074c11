//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use surrobid_core::sampling::latin_hypercube;
use surrobid_core::{Bounds, MarketInstance, SampleSet};

/// Load one of the bundled instances by file stem.
pub fn bundled_instance(stem: &str) -> MarketInstance {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../instances")
        .join(format!("{stem}.json"));
    MarketInstance::from_path(&path).expect("bundled instance")
}

/// `n` Latin hypercube samples of a smooth test function on the unit cube.
pub fn smooth_samples(dim: usize, n: usize, seed: u64) -> SampleSet {
    let bounds = Bounds::unit(dim).expect("unit box");
    let points = latin_hypercube(n, &bounds, seed).expect("design");
    let values = points
        .iter()
        .map(|x| {
            x.iter()
                .enumerate()
                .map(|(j, v)| (v - 0.3).powi(2) * (j + 1) as f64 + (5.0 * v).sin())
                .sum()
        })
        .collect();
    SampleSet::from_parts(bounds, points, values, 1e-9).expect("distinct samples")
}
