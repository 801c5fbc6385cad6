//! Decision engine for strictly auxetic infinitesimal deformations of
//! regular 3D periodic bar-and-joint frameworks with `n` vertex orbits and
//! `3n` edge orbits.
//!
//! The pipeline: build the linearized edge-length system in lattice
//! coordinates ([`deformation`]), parametrize its three-dimensional solution
//! space by three Gram-velocity entries, take the determinant of the
//! resulting pencil of symmetric matrices (a ternary cubic, [`cubic`]),
//! classify it through its Aronhold invariants, and for two-component curves
//! map it to Hesse normal form ([`hesse`]) to test the matrix at the preimage
//! of `(1:1:1)` for definiteness ([`decision`]).

pub mod cubic;
pub mod decision;
pub mod deformation;
pub mod document;
pub mod error;
pub mod framework;
pub mod hesse;
pub mod lab;
pub mod poly;
pub mod scalar;

pub use error::{Error, Result};
pub use framework::{EdgeOrbit, PeriodicFramework, SymmetricMatrix3};
pub use scalar::{Rational, Scalar};
