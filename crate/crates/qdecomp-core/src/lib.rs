//! Decomposition of heterogeneous quantile treatment effects into a
//! translated component (the effect at structurally comparable ranks) and a
//! structural component (the part attributable to between-group differences
//! in the outcome distribution), with bootstrap inference and
//! Kolmogorov-Smirnov-type dominance tests.
//!
//! The crate is `no_std` + `alloc`; all estimators are pure functions of an
//! immutable [`sample::WeightedSample`], so they can be evaluated
//! concurrently across bootstrap replications. IO, parallel drivers, and the
//! CLI live in the companion `qdecomp-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod averages;
pub mod dgp;
pub mod effects;
mod error;
pub mod inference;
pub mod math;
pub mod rng;
pub mod sample;
pub mod wstat;

pub use error::Error;

pub type Result<T> = core::result::Result<T, Error>;
