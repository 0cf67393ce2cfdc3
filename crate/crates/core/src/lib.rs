//! Correlation-network brain decoding: fuses a Delaunay-based topological
//! prior with strength correlations to assign each stimulus pixel a bin of
//! informative voxels, then trains pixel-wise decoders (linear SVM or
//! Tempotron spiking neurons) on those bins.
//!
//! The crate is `no_std` + `alloc`; all operations are pure functions of
//! their inputs and seeds, so results are bitwise reproducible. File I/O,
//! configuration, and the command-line pipeline live in the companion
//! `corrnet-cli` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod correlation;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod rng;
pub mod snn;
pub mod svm;
pub mod topology;

pub use error::{Error, Result};
pub use matrix::{BinMatrix, Matrix};
