//! Numerical core for two-weight estimates of iterated commutators.
//!
//! Everything here is allocation-only (`alloc`), with no IO: sampled grid
//! functions and quadrature, dyadic trees and sparse families, Muckenhoupt
//! weight diagnostics, local mean oscillations and sparse decompositions,
//! homogeneous singular integrals with their iterated commutators, the
//! sparse operators of the upper bound, and the certificate construction of
//! the lower bound.
//!
//! The `bloomlab` crate layers file formats, experiments and a CLI on top.
#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod math;

pub mod dyadic;
pub mod grid;
pub mod lowerbound;
pub mod operators;
pub mod oscillation;
pub mod sparse_ops;
pub mod weights;

pub use crate::error::{Error, Result};
pub use crate::grid::{Cube, Dim, Grid, GridFunction, QuadratureReport};
