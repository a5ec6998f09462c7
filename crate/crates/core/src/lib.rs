//! Multiscopic disparity estimation.
//!
//! Three co-planar, equal-baseline views (left, center, right) share the same
//! center-referenced disparity for both adjacent pairs. This crate estimates
//! that disparity by minimizing a self-supervised objective made of a cross
//! photometric term, a heteroscedastic uncertainty term, an
//! uncertainty-gated mutual-supervision term and an edge-aware smoothness
//! term, directly over per-pixel disparity and log-uncertainty fields.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, scene suites
//! and the command-line driver live in the `triview` crate.
//!
//! Pixel coordinates are `(u, v) = (column, row)` with the origin at the top
//! left. Intensities are normalized to `[0, 1]`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
pub mod grid;
pub mod frame;
pub mod warp;
pub mod ssim;
pub mod losses;
pub mod matcher;
pub mod adam;
pub mod refine;
pub mod synth;
pub mod metrics;

pub use error::{Error, Result};
pub use frame::MultiscopicFrame;
pub use grid::{DisparityField, Field, Image, Mask, UncertaintyField};
pub use losses::{LossConfig, LossReport, LossWeights, Mode};
pub use refine::{RefineConfig, RefineResult};
