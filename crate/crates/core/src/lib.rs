//! Simulation and statistical verification of small-time limit laws for
//! one-dimensional diffusions `dX = mu(X) dt + sigma(X) dW`.
//!
//! The crate zooms in on simulated paths at a fixed time and at the time of
//! the supremum, compares the rescaled marginals with Gaussian and Bessel-3
//! reference laws, and studies the error of estimating the supremum from
//! equidistant observations.
//!
//! Module map:
//!
//! - [`model`]: drift/diffusion coefficients and the builtin catalog.
//! - [`rng`] and [`simulate`]: reproducible Euler–Maruyama paths on nested grids.
//! - [`pathops`]: supremum, pre/post-supremum processes, zoom operators,
//!   quadratic variation and its inverse time change.
//! - [`scale`]: the scale-function transform removing the drift.
//! - [`reference`]: exact and simulated reference laws.
//! - [`stats`]: empirical CDFs, Kolmogorov–Smirnov tests, mixing diagnostics,
//!   log-log rate fits.
//! - [`experiments`]: end-to-end experiments producing JSON reports.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod model;
pub mod pathops;
pub mod quad;
pub mod reference;
pub mod rng;
pub mod scale;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use model::{builtin_model, validate, DiffusionModel, Interval, ValidationReport};
pub use pathops::{KilledPath, SupremumRecord, ZoomedPair};
pub use rng::SeedPlan;
pub use simulate::{simulate_path, Path};
