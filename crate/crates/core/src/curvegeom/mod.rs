//! Wire-curve differential geometry.

mod chart;
mod config;
mod family;
pub(crate) mod fd;
mod frame;
mod generic;
mod pipe;
mod wire;

pub use chart::{hull_margin, ExpPoint, PsiPoint, TubularChart};
pub use config::{curve_csv, CurveSpec};
pub use family::{CurveFamily, Parametric};
pub use frame::{parallel_frame, ParallelFrame};
pub use generic::{genericity_check, GenericityVerdict};
pub use pipe::{polyline_and_pipe, PolylineApprox};
pub use wire::{WireCurve, WireJet, WireSample, UNIT_SPEED_TOL};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("need at least 5 samples, got {0}")]
    TooFewSamples(usize),
    #[error("degenerate curve: {0}")]
    Degenerate(String),
    #[error("samples not equally spaced: chord {index} has length {chord}, expected {expected}")]
    NonUniformSpacing { index: usize, chord: f64, expected: f64 },
    #[error("arclength not increasing after s={0}")]
    NonMonotone(f64),
    #[error("not arclength-parametrized at s={s}: |d1|={speed}")]
    NotArclength { s: f64, speed: f64 },
    #[error("curve not embedded: non-adjacent samples {0} apart")]
    NotEmbedded(f64),
    #[error("seed frame is not orthonormal and normal to the tangent (defect {0})")]
    BadSeed(f64),
    #[error("radius {r} outside chart radius {radius}")]
    OutsideChart { r: f64, radius: f64 },
    #[error("chart radius {radius} must be positive and below the simple radius {simple}")]
    BadRadius { radius: f64, simple: f64 },
    #[error("segment length {eps} too large (curve length {length}, simple radius {simple})")]
    SegmentTooLong { eps: f64, length: f64, simple: f64 },
    #[error("config: {0}")]
    Config(String),
}
