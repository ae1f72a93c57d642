//! Trajectory-normalized gradient (TNG) compression for distributed
//! optimization, with a deterministic synchronous cluster simulator.

// `!(x > 0.0)` is used on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod codecs;
pub mod config;
pub mod error;
pub mod normalization;
pub mod optim;
pub mod plot;
pub mod problems;
pub mod rng;
pub mod trace;
pub mod vecmath;

pub use error::{Error, Result};
pub use vecmath::DenseVector;
