//! Exact machinery for mutations of Laurent polynomials and Fano polytopes.

pub mod ansatz;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod lattice;
pub mod laurent;
pub mod linear;
pub mod mutation;
pub mod par;
pub mod polygon2d;
pub mod polytope;
pub mod rigidity;

pub use error::{Error, Result};
