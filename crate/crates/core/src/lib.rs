//! Numerical tools for the thread problem on wire curves in 3-space.
//!
//! The crate is split by subsystem:
//!
//! - [`curvegeom`]: arclength-parametrized wire curves, parallel frames,
//!   tubular coordinates, jointed-pipe approximation and genericity checks.
//! - [`isoperimetry`]: weighted perimeter on half-strips, the two strip
//!   isoperimetric bounds and the one-dimensional interval inequality.
//! - [`harmlevel`]: discrete harmonic functions on a ring/sector disc mesh,
//!   level-set graphs and their classification.
//! - [`solver`]: the crescent competitor, the constrained Dirichlet-energy
//!   minimizer and the verification passes run on its output.
//!
//! Shared numerics live in [`hull`] (convex hulls) and [`linalg`] (banded
//! Cholesky).

pub mod curvegeom;
pub mod harmlevel;
pub mod hull;
pub mod isoperimetry;
pub mod linalg;
pub mod solver;

/// Three-vector used for all spatial quantities.
pub type Vec3 = nalgebra::Vector3<f64>;
