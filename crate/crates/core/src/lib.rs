//! Sparse collections, sparse operators and multilinear weight characteristics
//! on exactly represented dyadic domains.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dyadic;
pub mod error;
mod flow;
pub mod grid;
pub mod lab;
pub mod operators;
pub mod runner;
pub mod sparse;
pub mod weights;

pub use error::{Error, Result};
