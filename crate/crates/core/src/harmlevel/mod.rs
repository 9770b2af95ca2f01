//! Discrete harmonic functions on the unit disc and the structure of their
//! level sets.

mod classify;
mod field;
mod level;
mod mesh;

pub use classify::{hls_classify, plane_crescent_classify, ComponentKind, ComponentVerdict, HlsReport, PlaneCrescentReport};
pub use field::{sign_changes, solve_harmonic, solve_harmonic_values, vanishing_order, DiscField, VanishingOrder};
pub use level::{extract_level_graph, LevelEdge, LevelGraph, LevelNode, LevelPoint, NodeKind, PointLoc};
pub use mesh::{cotan_weights, BoundaryArc, DiscMesh};
pub(crate) use mesh::assemble_interior;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarmError {
    #[error("invalid mesh: {0}")]
    BadMesh(String),
    #[error("singular stencil: {0}")]
    Singular(String),
    #[error("level set contains a plateau near ({x:.4}, {y:.4})")]
    Plateau { x: f64, y: f64 },
    #[error("vanishing order ambiguous: fit residual {0:.3e}")]
    Ambiguous(f64),
    #[error("point ({0:.4}, {1:.4}) is not interior")]
    NotInterior(f64, f64),
    #[error("surface image meets the window boundary (distance {0:.3e})")]
    TouchesWindowBoundary(f64),
    #[error("{0}")]
    Invalid(String),
}
