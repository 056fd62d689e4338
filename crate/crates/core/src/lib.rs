//! Dataset cover complexity, network smoothness and accuracy bounds for
//! classification problems on `[0,1]^d`.
//!
//! The crate is organized bottom-up:
//!
//! - [`dataset`]: labeled point sets, loaders and synthetic generators.
//! - [`cover`]: nearest-neighbor statistics, h-curves, total/self/mutual
//!   cover, cover difference, cover complexity and the empirical
//!   separation gap.
//! - [`mlp`]: a small fully-connected ReLU/softmax network with exact
//!   backpropagation, Adam and spectral norms.
//! - [`smoothness`]: the inverse modulus of continuity on grids and its
//!   spectral-norm surrogate.
//! - [`bounds`]: accuracy estimators and the lower/upper bounds built
//!   from the quantities above.
//! - [`harness`]: seeded experiment drivers.
//! - [`cli`]: the `covbound` command-line front end.

pub mod bounds;
pub mod cli;
pub mod cover;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod mlp;
pub mod rng;
pub mod smoothness;

pub use error::{Error, Result};

/// Version tag carried by every JSON report.
pub const SCHEMA_VERSION: u32 = 1;
