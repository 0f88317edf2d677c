//! Calculus on stratified groups, the Heisenberg heat kernel, moment
//! decompositions of integrable data, and large-time decay experiments for
//! the heat equation `∂_t f = Σ_{i≤n} (X^i)² f`.
//!
//! Module map:
//!
//! * [`algebra`]: stratified Lie algebras, BCH group law, dilations, norms.
//! * [`fields`]: left-invariant vector fields, exact and on grids.
//! * [`kernel`]: heat kernels and their `L^q` norms.
//! * [`grid`]: sampled functions, group convolution, built-in data.
//! * [`decomp`]: moments and the fields `F_i`, `F_{ij}` of the moment
//!   decompositions, with weak-form residuals.
//! * [`asymptotics`]: Cauchy problem, expansion residuals, slope fits.
//! * [`cli`]: the `carnot` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algebra;
pub mod asymptotics;
pub mod cli;
pub mod decomp;
pub mod error;
pub mod fields;
pub mod grid;
pub mod kernel;
pub mod quadrature;

pub use algebra::{GroupPoint, StratifiedAlgebra};
pub use error::{Error, Result};
pub use grid::GridFunction;
pub use kernel::{HeatKernel, KernelSpec, KernelValue};
