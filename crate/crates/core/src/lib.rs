//! Recommender evaluation core: neighborhood and BPR matrix-factorization
//! recommenders, per-user ranking metrics, paired Student's t-tests, and
//! discriminative-power analysis of metrics over hyper-parameter grids.
//!
//! The crate is `no_std` (with `alloc`) and free of IO. Every operation that
//! consumes randomness takes an explicit seed, so results are a pure
//! function of their inputs. File formats, persistence and the parallel
//! sweep driver live in the `recdp` companion crate.
#![cfg_attr(all(not(feature = "std"), not(test)), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod dataset;
mod error;
pub mod math;
pub mod metrics;
pub mod recommenders;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
