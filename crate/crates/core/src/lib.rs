//! Gauge-invariant quantization of N-body systems in rotating frames.

pub mod cli;
pub mod error;
pub mod gauge;
pub mod geometry;
pub mod gribov;
pub mod quad;
pub mod rotation;
pub mod spectra;
pub mod weylalg;

pub use error::{Error, Result};
