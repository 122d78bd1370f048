//! Solvers and diagnostics for unnormalized optimal transport between
//! nonnegative densities of unequal mass.
//!
//! The dynamic UW2 distance is computed by a Chambolle-Pock primal-dual
//! iteration on a staggered space-time grid ([`solver`]); the UW1 distance by
//! a minimal-flux iteration with a 1D closed form as oracle ([`uw1`]).
//! [`analysis`] evaluates the optimality structure of a solve: duality gap,
//! continuity and Hamilton-Jacobi residuals, mass identities, and the 1D
//! push-forward defect. [`runner`] drives whole experiments from a JSON
//! config and writes plot-ready CSV output.

pub mod analysis;
pub mod cubic;
pub mod densities;
pub mod error;
pub mod grid;
pub mod runner;
pub mod solver;
pub mod uw1;

pub use error::{Error, Result};
