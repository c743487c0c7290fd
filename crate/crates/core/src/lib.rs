//! Scaling laws for data filtering under a compute budget.
//!
//! The loss of a model trained on a pool of quality-ranked web data is
//! modelled as a power law whose exponent (the pool's *utility*) decays
//! geometrically each time the pool is repeated. This crate evaluates that
//! law for single pools and for uniform mixtures of pools, fits its
//! constants to observed error curves by exhaustive grid search, ships
//! numerical oracles that integrate the underlying per-sample dynamics, and
//! plans which prefix of a quality ladder to train on at a given budget.
//!
//! The crate is `no_std` (it needs `alloc`). The `std` feature is on by
//! default; `parallel` adds rayon-backed grid and matrix evaluation with
//! results that are bit-identical to the sequential path.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
pub(crate) mod math;

pub mod curation;
pub mod fitting;
pub mod formulations;
pub mod mixture;
pub mod scaling;
pub mod sim;

pub use error::{Error, Result};

pub use curation::{BucketLadder, Crossover, StrategyReport};
pub use fitting::{FitResult, ParamGrid, PoolFit, PoolObservations};
pub use mixture::{MixtureParams, MixtureSpec, PoolEntry};
pub use scaling::{EpochSchedule, UtilityParams};
pub use sim::{SimConfig, Trajectory};
