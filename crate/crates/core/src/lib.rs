//! Topology optimization with a neural displacement field.
//!
//! The forward elasticity problem is solved either by training a
//! coordinate network to minimize the SIMP-penalized potential energy
//! (the deep energy method, [`demsolver`]) or by a classical finite element
//! solve on the same grid ([`femsolver`]). Density updates use the method of
//! moving asymptotes on filtered pseudo-densities ([`topopt`]).

pub mod cases;
pub mod demsolver;
pub mod elasticity;
pub mod error;
pub mod femsolver;
pub mod grid;
pub mod neuralfield;
pub mod topopt;

pub use error::{Error, Result};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
