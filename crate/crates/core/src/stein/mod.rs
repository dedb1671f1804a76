//! The analytic objects of the concentration-inequality argument: the vector
//! field `f(A, eps)`, the smoothed indicator `h_eps`, the solution of the
//! Gaussian Stein equation, and the Gaussian derivative integrals that bound
//! its third derivatives.

mod field;
mod integrals;
mod smoothing;
mod solution;

pub use field::SteinField;
pub use integrals::{
    lemma33_cubic_constant, lemma33_cubic_mc, lemma33_linear, lemma33_linear_mc, lemma34_bound,
    lemma34_mixed, CUBIC_CONSTANT,
};
pub use smoothing::{psi, psi_derivative, SmoothedIndicator};
pub use solution::{QuadratureSpec, SolutionValue, SteinSolution};
