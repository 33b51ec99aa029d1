//! Fitness landscape analysis for combinatorial architecture-search spaces.
//!
//! The crate computes a problem's landscape footprint: fitness density,
//! fitness-distance correlation, ruggedness, local-optima cardinality and
//! rank persistence across training budgets.

pub mod analysis;
pub mod benchmark;
pub mod cli;
pub mod error;
pub mod footprint;
pub mod genotype;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
