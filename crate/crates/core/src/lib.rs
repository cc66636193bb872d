//! Density-ratio based approximate data deletion for generative models.
//!
//! A model `p̂` is trained on `X`; a user asks for `X' ⊂ X` to be erased.
//! Instead of re-training, a density ratio estimator `ρ̂_ε ≈ p̂'/p̂` is fit
//! between `X` and `X \ X'` and samples of the deleted model are produced by
//! rejection sampling `p̂` against `ρ̂_ε`. The same ratio drives likelihood
//! ratio and φ-divergence statistics that test whether a model has had the
//! points removed.
//!
//! Modules:
//!
//! - [`data`]: the MoG-8 and CKB-8 synthetic mixtures, training sets and deletion sets.
//! - [`kde`]: Gaussian kernel density estimation, the learner being "unlearned".
//! - [`dre`]: the exact KDE ratio and the classifier-based estimators (KBC, kNN).
//! - [`sampling`]: rejection sampling from `ρ̂_ε · p̂`.
//! - [`stats`]: LR, ASC, MMD and the two-sample KS comparison.
//! - [`harness`]: the repeated-experiment protocol (Q1/Q2/Q3, deletion test).
//! - [`cli`]: the `dre-deletion` command-line entry point.

pub mod cli;
pub mod data;
pub mod dre;
mod error;
pub mod harness;
pub mod kde;
pub mod kernel;
pub mod rng;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};

/// A point in the plane. All synthetic experiments live in two dimensions.
pub type Point = [f64; 2];

/// Dimension of [`Point`].
pub const DIM: usize = 2;
