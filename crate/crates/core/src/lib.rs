//! RPR² rounding for MAX NAE-SAT.
//!
//! RPR² ("random projection, randomized rounding") rounds a vector solution
//! by projecting every vector onto a shared Gaussian direction `r` and then
//! setting each variable to `+1` with probability `(1 + f(r·v)) / 2` for an
//! odd rounding function `f: ℝ → [-1, 1]`. This crate evaluates, optimizes
//! and stress-tests such rounding functions:
//!
//! * [`normal`], [`quad`]: Gaussian CDFs, probit, bivariate rectangle
//!   probabilities, adaptive Gauss–Kronrod quadrature.
//! * [`step`], [`gram`], [`polytope`]: rounding-function and bias-matrix
//!   domain types.
//! * [`moments`]: exact and Monte Carlo moment functions `F_k`.
//! * [`fredholm`]: optimal rounding for MAX CUT and MAX NAE-{3}-SAT hard
//!   distributions via a discretized Fredholm equation.
//! * [`hardness`]: the `3(√21 − 4)/2` MAX NAE-{3,5}-SAT bound.
//! * [`gapgen`]: explicit integrality-gap instances.
//! * [`stepopt`]: step-function optimization for mixed clause sizes.
//! * [`optim`]: golden-section search and Nelder–Mead.
//! * [`hermite`]: normalized Hermite polynomials and coefficient geometry.
//! * [`pipeline`]: end-to-end rounding of NAE instances.

pub mod error;
pub mod fredholm;
pub mod gapgen;
pub mod gram;
pub mod hardness;
pub mod hermite;
pub mod moments;
pub mod normal;
pub mod optim;
pub mod pipeline;
pub mod polytope;
pub mod quad;
pub mod step;
pub mod stepopt;

pub use error::{Error, Result};
pub use gram::{GramConfig, GramDiagnostics, VectorAssignment};
pub use moments::MomentEstimate;
pub use step::{GridFunction, StepFunction};
