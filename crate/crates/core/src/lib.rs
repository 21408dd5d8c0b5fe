//! Monte Carlo simulation of reflected drifted Brownian motion with elastic,
//! sticky and jump boundary behaviour, its lift to graph networks, and the
//! earthquake-sequence model built on top of it.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod boundary;
pub mod config;
pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod quadrature;
pub mod quake;
pub mod rdbm;
pub mod rng;
pub mod subordinators;
pub mod validate;

pub use error::{Error, Result};
