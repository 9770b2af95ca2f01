//! The one-crescent thread problem: the explicit competitor, the
//! length-constrained Dirichlet minimizer and checks run on its output.

mod competitor;
mod crescent;
mod minimize;
mod verify;

pub use competitor::{build_competitor_p0, chord_deficit, WidthRule};
pub use crescent::{evaluate, metric_of, CrescentMesh, RefTriangle, SolveReport};
pub use minimize::{minimize, SolveOutcome, SolverSettings, ThreadProblem};
pub use verify::{
    enclosure_probe, extract_kappa, fit_exponent, pulled_back_arclength, tube_radii, verify_all, verify_convex_hull,
    verify_near_wire, verify_slicewise, Enclosure, HullCheck, KappaEstimate, NearWireCheck, SlicewiseVerdict,
};

use thiserror::Error;

use crate::curvegeom::CurveError;
use crate::harmlevel::HarmError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("wire is straight (κ_max = {0:.3e}); no crescent competitor exists")]
    StraightWire(f64),
    #[error("deficit {lambda} not admissible for a wire of length {length} (end gap {gap})")]
    BadDeficit { lambda: f64, length: f64, gap: f64 },
    #[error("width {0} does not fit on the wire")]
    BadWidth(f64),
    #[error("invalid crescent: {0}")]
    Invalid(String),
    #[error("triangle {triangle} is degenerate")]
    Degenerate { triangle: usize },
    #[error("mesh tangled at iteration {iteration}: triangle {triangle} flipped")]
    Tangled { iteration: usize, triangle: usize },
    #[error("vertex {vertex} leaves the tubular chart: {source}")]
    ChartExit { vertex: usize, source: CurveError },
    #[error("thread has {0} vertices, need at least 8")]
    ShortThread(usize),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Harm(#[from] HarmError),
}

pub type Result<T> = std::result::Result<T, SolveError>;
