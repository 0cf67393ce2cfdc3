//! Reproducible command-line pipeline around `corrnet-core`: synthetic
//! dataset generation, correlation-graph construction, per-pixel decoder
//! training, image reconstruction, and evaluation reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;

pub use config::{parse_config, Decoder, PipelineConfig};
pub use error::{CliError, Result};
