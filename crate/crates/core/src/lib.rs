//! One-excitation dynamics of a two-level emitter in a microcavity with
//! coherent time-delayed feedback from a half-cavity mirror.
//!
//! The crate is split along the analysis pipeline:
//!
//! - [`model`]: physical constants and the discretized mode bath
//! - [`stationary`]: the dark stationary state
//! - [`dynamics`]: time integration and beat spectra
//! - [`stability`]: eigenmodes of the linearized equations
//! - [`spectrum`]: roots of the characteristic equation and critical ratios

pub mod dynamics;
pub mod error;
pub mod model;
pub mod spectrum;
pub mod stability;
pub mod stationary;

pub use error::{Error, Result};
pub use model::{build_grid, build_params, Generator, ModeGrid, PhysicalParams};
