//! Solver for one-dimensional quenching reaction-diffusion problems
//!
//! The equation of interest is `u_t = u_xx + f(u)` on `(-a, a)` with zero
//! boundary and initial data, where the source `f` blows up as `u` approaches
//! a singular level (the canonical example is `f(u) = 1/(1-u)`). Depending on
//! the half-width `a`, the solution either settles into a steady state or
//! touches the singular level in finite time ("quenching"), at which point
//! `u_t` ceases to exist.
//!
//! The crate provides:
//!
//! * [`grid`]: symmetric, possibly nonuniform meshes on `[-a, a]`;
//! * [`linalg`]: the tridiagonal diffusion operator, weighted norms,
//!   logarithmic norms, shifted solves, and small dense validation utilities;
//! * [`model`]: singular source terms, initial data, and problem assembly;
//! * [`semidiscrete`]: a method-of-lines reference integrator used as ground
//!   truth by the studies;
//! * [`splitting`]: the implicit splitting scheme with adaptive time steps
//!   that track the approach to the singularity, plus its structure monitors
//!   (positivity, monotonicity, sub-unity bound, step decay);
//! * [`harness`]: convergence studies, critical half-width search, linear
//!   algebra validation, and the command-line interface.

// Guards are written `!(x > 0.0)` rather than `x <= 0.0` so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod semidiscrete;
pub mod splitting;

pub use error::{Error, Result};
