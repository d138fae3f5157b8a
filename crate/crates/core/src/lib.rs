//! Exact-diagonalization toolkit for quantum many-body scars from kinetic frustration.

extern crate openblas_src;

pub mod analysis;
pub mod basis;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod models;
pub mod operator;
pub mod spectral;
pub mod symmetry;

pub type C64 = num_complex::Complex<f64>;

pub use basis::{Boundary, FockBasis, Geometry, LatticeSpec, ParticleKind, SectorConstraint};
pub use error::{Error, Result};
pub use operator::{SparseOperator, Terms};
