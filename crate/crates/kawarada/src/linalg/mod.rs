//! Linear algebra for the semidiscrete and split schemes.
//!
//! The workhorse is [`TridiagonalOperator`], the nonuniform central-difference
//! approximation of `d^2/dx^2` with zero boundary conditions. Everything the
//! solver does per step is O(N): apply the operator, or solve the shifted
//! system `(I - tau A) w = rhs` by elimination without pivoting (the shifted
//! matrix is strictly diagonally dominant with nonpositive off-diagonals).
//!
//! Norms are weighted by the grid's trapezoidal weights so that refinement
//! does not inflate vector norms, and the associated logarithmic norm
//! `mu(B) = lim_{t->0+} (||I + tB|| - 1) / t` is computed in the weighted
//! 2-norm as the largest eigenvalue of a symmetrized similarity transform.
//!
//! The [`dense`] submodule holds small, validation-scale utilities (LU solve,
//! Jacobi and Sturm eigenvalue routines, matrix exponential) that back up the
//! O(N) paths in tests and in the `validate` study; they are deliberately
//! simple and size-guarded rather than fast.

mod dense;
mod norms;
mod tridiagonal;

pub use dense::{DenseMatrix, SplitMix64, EXPM_SIZE_LIMIT};
pub use norms::{
    default_probe_steps, log_norm_2, log_norm_extremal_trial, log_norm_limit_probe,
    WeightedNormContext,
};
pub use tridiagonal::TridiagonalOperator;

pub(crate) use norms::weighted_norm_2;
