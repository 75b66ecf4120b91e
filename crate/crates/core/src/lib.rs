//! Tests for extreme value indices of high-dimensional heavy-tailed data.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod dependence;
pub mod error;
pub mod hill;
pub mod linalg;
pub mod maxtest;
pub mod mc;
pub mod numerics;
pub mod procedure;
pub mod simulate;

pub use data::DataMatrix;
pub use error::{Error, Result};
pub use numerics::Probability;
