//! Box grids, spectral operators, quadrature and the Galerkin velocity basis.

mod basis;
mod domain;
mod field;
pub mod ops;
mod snapshot;

pub use basis::{galerkin_basis, BasisMode, GalerkinBasis};
pub use domain::{make_domain, Boundary, Domain, DomainSpec, Parity};
pub use field::{velocity_parity, ScalarField, TensorField, VectorField};
pub use ops::{
    dealias, derivative, divergence, grad_vec, gradient, hessian, integrate, laplacian, negative_sobolev_norm,
    negative_sobolev_norm_vec,
};
pub use snapshot::{read_snapshot, write_snapshot, FieldKind, Snapshot, SnapshotHeader};
