//! Global point-cloud registration by Bayesian optimization over initial ICP poses.
//!
//! ICP converges to whichever local minimum is closest to its starting pose.
//! This crate searches the space of starting poses `[x, y, z, roll, pitch, yaw]`
//! with a Gaussian-process surrogate of the post-ICP objective and an
//! expected-improvement acquisition, then hands the best pose to a final ICP
//! refinement.
//!
//! Layout:
//!
//! - [`geom`]: rigid transforms, Euler parametrization, error metrics
//! - [`cloud`]: point container, voxel downsampling, exact kd-tree
//! - [`icp`]: point-to-point ICP and the scalar objective
//! - [`surrogate`]: Gaussian-process regression on normalized poses
//! - [`acquisition`]: expected improvement and its bounded maximization
//! - [`optimizer`]: the BO loop in full 6-DOF and nested rotation/translation modes
//! - [`baseline`]: pyramid grid search and pure random search
//! - [`eval`]: overlap-based pair selection, metrics, Welch ANOVA
//! - [`io`]: point-cloud and pose-file parsers and writers
//! - [`synth`]: deterministic synthetic scenes for tests and demos

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod baseline;
pub mod cloud;
mod error;
pub mod eval;
pub mod geom;
pub mod icp;
pub mod io;
pub mod optimizer;
pub mod surrogate;
pub mod synth;

pub use crate::error::{Error, Result};
