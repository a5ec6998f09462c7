//! File formats, scene suites, run reports and the command-line driver for
//! [`triview_core`].
//!
//! Views are read from PGM, PPM or PNG and normalized to `[0, 1]`; fields
//! are stored as PFM; reports and configuration snapshots are JSON.

pub mod cli;
mod error;
pub mod image_io;
pub mod pfm;
pub mod pipeline;
pub mod pnm;
pub mod scene_dir;
pub mod settings;
pub mod viz;

pub use error::{Error, Result};
pub use image_io::load_image;
pub use pipeline::{run_frame, Metrics, Report};
pub use settings::RunSettings;
