//! Nonholonomic geodesic flows of left-invariant metrics on compact Lie
//! groups, reduced to the Euler-Poincare-Suslov equations on the Lie algebra.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cli;
pub mod dynamics;
pub mod integrable;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod metrics;
pub mod sampling;

pub use error::{Error, Result};
