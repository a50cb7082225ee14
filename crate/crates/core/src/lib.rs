//! Moreau envelopes, proximal mappings and KL / level-set / Hölder error-bound
//! certificates for closed univariate functions.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod catalog;
pub mod certify;
pub mod cli;
pub mod envelope;
pub mod error;
pub mod fnmodel;
pub mod varanalysis;

pub use error::{Error, Result};
