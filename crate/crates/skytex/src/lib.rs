//! Command-line pipelines for `skytex-core`: a versioned JSON experiment
//! config, CSV/JSON file formats that round-trip exactly, static SVG
//! renders, and the figure pipelines behind `skytex reproduce`.

pub mod cli;
pub mod config;
mod error;
pub mod formats;
pub mod pipeline;
pub mod render;

pub use error::{CliError, Result};
