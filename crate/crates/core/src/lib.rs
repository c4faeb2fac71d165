//! Design and evaluation of two-qubit state-tomography measurements whose
//! entangling gates are noisy.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gates;
pub mod noise;
pub mod optimize;
pub mod par;
pub mod quality;
pub mod quantum;
pub mod tomography;

pub use error::{Error, Result};
pub use par::Execution;
