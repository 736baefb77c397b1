// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimator;
pub mod moments;
mod nelder_mead;
pub mod params;
mod quad;
pub mod rng;
pub mod sim;
pub mod special;

pub use error::{FbpError, Result};
pub use params::ProcessParams;
pub use rng::RngStream;
