//! Pseudo-spectral simulation and decay-rate verification for the
//! two-dimensional incompressible porous media equation linearized around a
//! stable stratification `rho = -N x2 + sigma(x2) + theta`.
//!
//! Supported domains are the torus `T^2`, the strip `T x [-1, 1]` with
//! impermeable walls, and a large periodic box standing in for `R^2`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
mod fft;
pub mod fields;
pub mod initial;
pub mod operators;
pub mod propagator;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
