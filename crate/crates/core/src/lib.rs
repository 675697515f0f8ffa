//! Minimum-error discrimination of quantum states, with exact and numerical
//! tests for when the best strategy is to skip the measurement and always
//! guess the a priori most likely state.

#![forbid(unsafe_code)]
// `!(x <= tol)` is deliberate: NaN residuals must fail checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod optimality;
mod par;
pub mod random;
pub mod report;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Tolerances, C64};
