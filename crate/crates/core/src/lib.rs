#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod equilibrium;
pub mod error;
pub mod potential;
pub mod quadrature;
pub mod sampler;

pub use error::{Error, Result};
