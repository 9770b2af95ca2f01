mod curve;
mod harm;
mod iso;
mod solve;

use std::sync::Arc;

use threadwire::curvegeom::{CurveError, WireCurve};
use threadwire::harmlevel::HarmError;
use threadwire::solver::SolveError;

use crate::config::{ExperimentConfig, Task};
use crate::{Artifacts, CliError};

pub(crate) fn run(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    match &cfg.task {
        Task::Solve { .. } => solve::solve(cfg),
        Task::Sweep { .. } => solve::sweep(cfg),
        Task::IsoCheck { .. } => iso::iso_check(cfg),
        Task::Rado { .. } => harm::rado(cfg),
        Task::LevelSet { .. } => harm::levelset(cfg),
        Task::CurveCheck { .. } => curve::curve_check(cfg),
    }
}

/// Builds the configured wire; an unusable wire is a config error.
fn wire(cfg: &ExperimentConfig) -> Result<Arc<WireCurve>, CliError> {
    let spec = cfg.wire.as_ref().ok_or_else(|| CliError::Config("missing [wire] section".into()))?;
    spec.build().map(Arc::new).map_err(|e| CliError::Config(format!("wire: {e}")))
}

/// Provenance line for files that are not tables.
fn stamp(cfg: &ExperimentConfig, body: &str) -> String {
    format!("# config_digest={} seed={}\n{body}", cfg.digest, cfg.seed)
}

fn solve_err(e: SolveError) -> CliError {
    match e {
        SolveError::StraightWire(_) | SolveError::BadDeficit { .. } | SolveError::BadWidth(_) => CliError::Config(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    }
}

fn harm_err(e: HarmError) -> CliError {
    match e {
        HarmError::BadMesh(_) => CliError::Config(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    }
}

fn curve_err(e: CurveError) -> CliError {
    CliError::Numerical(e.to_string())
}
