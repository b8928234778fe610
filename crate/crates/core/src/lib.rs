//! Sparse-view scene completion toolkit.
//!
//! * [`geometry`]: cameras, bounding boxes, coverage spheres and frustum tests.
//! * [`planner`]: pose distance, pose-path interpolation, information gain and
//!   the greedy coverage-driven trajectory planner.
//! * [`splat`]: CPU Gaussian splatting with analytic gradients, photometric
//!   optimization, degradation generators and image metrics.
//! * [`consistency`]: depth-based cross-view warping, the masked L1
//!   consistency energy, guidance steps, repair oracles and the refinement loop.
//! * [`io`], [`scene`], [`config`]: file formats, procedural test scenes and
//!   run configuration shared by the CLI and the browser demo.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod consistency;
pub mod error;
pub mod geometry;
pub mod io;
pub mod planner;
pub mod scene;
pub mod splat;

pub use error::{Error, Result};
