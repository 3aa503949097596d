//! Steady incompressible flow, adjoint and shape-gradient toolkit.
//!
//! The crate discretizes the stationary Navier–Stokes equations with the
//! MINI element (continuous P1 velocity enriched by a cubic bubble per
//! triangle, continuous P1 pressure), solves the linear adjoint system that
//! belongs to the total dissipated energy, evaluates the boundary shape
//! gradient on the free part of the boundary and drives a volume-constrained,
//! H1-smoothed gradient descent over the mesh nodes.
//!
//! Module map:
//! - [`mesh`]: triangulations with tagged boundaries, generators, deformation.
//! - [`fem`]: quadrature, MINI element kernels, static condensation, sparse solves.
//! - [`flow`]: Stokes / Navier–Stokes solvers and the dissipated energy.
//! - [`adjoint`]: adjoint state solver.
//! - [`shape_opt`]: shape gradient, descent smoothing, step control, optimizer,
//!   finite-difference verification.
//! - [`cli`]: configuration, exports and the `adjflow` command line.

// Element kernels index small fixed-size blocks; `!(x > y)` guards also reject NaN.
#![allow(
    clippy::needless_range_loop,
    clippy::excessive_precision,
    clippy::neg_cmp_op_on_partial_ord
)]

pub mod adjoint;
pub mod cli;
pub mod fem;
pub mod flow;
pub mod mesh;
pub mod shape_opt;

mod error;

pub use error::{Error, Result};
