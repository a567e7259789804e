//! Standard generalized Pareto processes on [0, 1]: D-norms, path simulation,
//! estimators of the kernel scale and the local asymptotic normality checks.

// Guards are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dnorm;
pub mod error;
pub mod estimators;
pub mod generator;
pub mod grid;
pub mod harness;
pub mod kernel;
pub mod lan;
pub mod processes;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
