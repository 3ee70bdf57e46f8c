//! Enzyme catalysis with an inhibitor under almost-periodic substrate and
//! inhibitor inflows.
//!
//! The crate simulates the reduced four-species mass-action system,
//! certifies its sign structure, builds constant sub/super-solution
//! brackets, runs the shifted-linear monotone iteration and post-processes
//! trajectories into attractor diagnostics.

// Validation uses `!(x > 0.0)` on purpose so that NaN is rejected too, and
// the 4×4 Jacobian loops read more clearly with explicit indices.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod apsignal;
pub mod artifacts;
pub mod bracketing;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod integrate;
pub mod model;
pub mod monotonicity;
pub mod ode;
pub mod reproduce;

pub use error::{Error, Result};
