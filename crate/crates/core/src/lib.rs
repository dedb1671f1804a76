//! Numerical verification of Stein's-method concentration inequalities and
//! the multivariate Berry-Esseen bound `115 sqrt(k) gamma` over convex sets.
//!
//! Layout:
//! - [`geometry`]: convex sets, membership, dilation/erosion, projection.
//! - [`stein`]: the field `f(A, eps)`, smoothed indicators, Stein solutions.
//! - [`vectors`]: standardized sums of independent random vectors.
//! - [`harness`]: Monte Carlo certification of the concentration and
//!   normal-approximation bounds.
//! - [`config`], [`report`], [`runner`]: experiment files, orchestration, output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod lemmas;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod stein;
pub mod vectors;

pub use error::{Error, Result};
pub use geometry::{Ball, ConvexSet, HalfSpace, Point, Polytope, ProjectionResult, Tolerances};
pub use stein::{SmoothedIndicator, SteinField, SteinSolution};
pub use vectors::{DistributionFamily, GammaReport};

/// Crate version recorded in every result.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
