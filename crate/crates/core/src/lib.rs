// `!(x > 0.0)` guards are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod kernel;
pub mod manifold;
pub mod sampler;
pub mod specfun;
pub mod spectrum;
