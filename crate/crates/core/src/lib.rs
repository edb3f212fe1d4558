//! Finite element solver for elliptic optimal control problems with rough
//! coefficients, using rough polyharmonic spline coarse spaces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coeff;
pub mod error;
pub mod fem;
pub mod homog;
pub mod linalg;
pub mod mesh;
pub mod ocp;

pub use error::{Error, Result};
