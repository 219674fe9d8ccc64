//! Sparse, slowly changing dynamic Gaussian graphical models.
//!
//! A time course of `g` genes observed at `t` times is modeled as one
//! `g·t`-dimensional Gaussian. Its precision matrix is estimated by a
//! log-det program with two ℓ1 penalties: one for sparsity and one fusing
//! the same lag block across consecutive times, so networks change slowly.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod selection;
pub mod simulation;
pub mod solver;
pub mod structure;

pub use dataset::{EmpiricalCovariance, TimeCourseDataset};
pub use error::{Error, Result};
pub use solver::{solve, PenaltyConfig, PrecisionEstimate, SolverSettings};
pub use structure::{BlockDescriptor, BlockKind, BlockLayout, DifferenceMap, SupportMask};
