//! Surrogate-based black-box optimization with a Kriging model and a
//! spatial-temporal entropy exploration term, bundled with the energy-storage
//! bidding problem it was built for.
//!
//! The crate is organized bottom-up:
//!
//! - [`sampling`]: seedable Latin hypercube and uniform box designs.
//! - [`kriging`]: fixed-hyperparameter Kriging interpolation.
//! - [`entropy`]: the incremental entropy term, the acquisition function and
//!   ordering utilities.
//! - [`optimizer`]: the outer surrogate loop, the acquisition minimizer,
//!   derivative-free baselines and grid enumeration.
//! - [`market`]: DC-network market clearing with storage, solved exactly by
//!   branch-and-bound over charge/discharge indicators, and the bidding
//!   objective built on top of it.
//! - [`qp`]: the dense convex QP solver used by the market clearing.

pub mod entropy;
pub mod error;
pub mod kriging;
pub mod market;
pub mod optimizer;
pub mod qp;
pub mod sampling;

pub use entropy::EntropyConfig;
pub use error::{Error, Result};
pub use kriging::{KernelHyper, KrigingModel, SampleSet};
pub use market::{Bid, ClearingResult, MarketInstance};
pub use optimizer::{Objective, OptimizerConfig, RunTrace};
pub use sampling::Bounds;
