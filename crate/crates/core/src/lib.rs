//! Deterministic visual-corruption engine.
//!
//! The crate is organised bottom-up:
//!
//! - [`image`]: 8-bit and normalized frames, masks, kernels, convolution and
//!   agent-centric compositing.
//! - [`rng`]: the counter-based random stream every stochastic operator draws from.
//! - [`ops`]: the seven physical degradation operators and their constants.
//! - [`schedule`]: the sticky Markov chain over corruption modes and the
//!   per-segment severity random walk, plus trace export and statistics.
//! - [`dataset`]: paired dataset generation (degraded / clean / agent-only / mask).
//! - [`infolab`]: exact finite-alphabet information quantities and the
//!   contamination, Fano, foreground-anchor and bottleneck checks.
//!
//! Everything is a pure function of its inputs and an explicit [`rng::RngStream`];
//! there is no global random state.

pub mod dataset;
pub mod error;
pub mod image;
pub mod infolab;
pub mod io;
pub mod ops;
pub mod rng;
pub mod schedule;

pub use error::{Error, Result};
pub use image::{Image8, ImageF, Kernel2D, Mask};
pub use ops::{CorruptionMode, DegradationConfig, Severity};
pub use rng::RngStream;

/// Version string written into every manifest and trace header.
pub const ENGINE_VERSION: &str = concat!("degrade-core/", env!("CARGO_PKG_VERSION"));
