//! Online polarization and disagreement minimization.
//!
//! Friedkin–Johnsen opinion dynamics on weighted graphs, forest-matrix
//! action sets, and the explore-subspace-then-refine bandit with its
//! full-dimensional and oracle-subspace baselines.

pub mod arms;
pub mod environment;
pub mod error;
pub mod graph;
pub mod numerics;
pub mod opinion;
pub mod rsc;
pub mod seeds;
pub mod stage1;
pub mod stage2;

pub use error::{Error, Result};
