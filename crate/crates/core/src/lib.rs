//! Optimal control of the fractional (Caputo-Fabrizio) SIS epidemic model.
//!
//! The crate is organised around the pipeline used to study the controlled
//! infected-population dynamics:
//!
//! - [`model`]: parameters, the reduced drift `b_alpha`, equilibria, the
//!   saturated reformulation and uncontrolled integration.
//! - [`hjb`]: explicit upwind time marching of the Hamilton-Jacobi-Bellman
//!   equation `u_t - b(x) u_x + u_x^2 / 2 - x^2 / 2 = 0`.
//! - [`stationary`]: the explicit stationary solution used as the large-time
//!   reference, plus discrepancy norms.
//! - [`control`]: feedback reconstruction and forward Euler optimal trajectories.
//! - [`harness`]: configuration parsing and the batch experiments behind the CLI.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod harness;
pub mod hjb;
pub mod model;
pub mod stationary;

pub use error::{Error, Result};
