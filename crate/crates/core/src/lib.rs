//! Galerkin and spectral tools for viscous and inviscid quantum fluids.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretization;
pub mod energy;
pub mod error;
pub mod hashing;
pub mod identities;
pub mod limits;
pub mod persist;
pub mod physics;
pub mod relative_energy;
pub mod semiflow;
pub mod solver;
pub mod trajectory;

pub use error::{Error, Result};
