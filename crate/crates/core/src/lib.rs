//! Poised lattice generation on Cartesian grids and a fourth-order
//! finite-difference method for PDEs on irregular domains.
//!
//! The crate has two halves.  The combinatorial half ([`lattice`],
//! [`testset`], [`search`]) generates *poised* interpolation lattices — point
//! sets on which multivariate polynomial interpolation is unisolvent — from
//! an arbitrary feasible subset of grid nodes, by a depth-first search over
//! permutation matrices with group-theoretic pruning.  The numerical half
//! ([`interp`], [`geom`], [`disc`], [`solver`], [`timestep`]) builds
//! fourth-order finite-difference discretizations on irregular domains
//! embedded in Cartesian grids: regular nodes use tensor-product stencils,
//! irregular nodes get least-squares stencils fitted on generated lattices,
//! and the resulting sparse systems are solved directly or by a
//! preconditioned Krylov method.
//!
//! The `plg-bench` binary reproduces the benchmark suite; see the README.

pub mod bench;
pub mod cube;
pub mod dense;
pub mod disc;
pub mod error;
pub mod geom;
pub mod index;
pub mod interp;
pub mod lattice;
pub mod rng;
pub mod search;
pub mod solver;
pub mod sparse;
pub mod testset;
pub mod timestep;

pub use error::{Error, Result};
pub use index::MultiIndex;
pub use lattice::{
    formation, is_triangular_lattice, lattice_cardinality, principal_lattice, restoration,
    DPermutation, PrincipalLattice, TriangularLattice,
};
pub use search::{tlg_solve, FeasibleSet, OrderingRule, SearchStats, TlgProblem};
pub use testset::{test_sets, TestSetKind};
