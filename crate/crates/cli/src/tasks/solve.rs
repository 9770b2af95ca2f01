use std::sync::Arc;

use rayon::prelude::*;
use threadwire::curvegeom::{TubularChart, WireCurve};
use threadwire::solver::{
    build_competitor_p0, enclosure_probe, evaluate, fit_exponent, minimize, verify_convex_hull, Enclosure, SolveError, SolveOutcome,
    SolverSettings, ThreadProblem, WidthRule,
};

use super::{solve_err, stamp, wire};
use crate::config::{ExperimentConfig, Task, Tolerances};
use crate::csv::{flag, num, opt, opt_flag, Table};
use crate::{Artifacts, CliError};

const SOLVE_COLUMNS: [&str; 23] = [
    "lambda",
    "energy",
    "area",
    "thread_length",
    "wire_segment",
    "boundary_length",
    "budget",
    "violation",
    "conformality",
    "kappa",
    "kappa_spread",
    "kappa_multiplier",
    "r_max",
    "r1",
    "alpha",
    "r2",
    "hull_margin",
    "hull_ok",
    "kappa_ok",
    "slicewise_ok",
    "near_wire_ok",
    "iterations",
    "converged",
];

const COMPETITOR_COLUMNS: [&str; 12] = [
    "lambda",
    "half_width",
    "energy",
    "area",
    "energy_target",
    "energy_ok",
    "boundary_length",
    "length_target",
    "length_error",
    "length_ok",
    "conformality",
    "hull_margin",
];

fn settings(t: &Tolerances, seed: u64) -> SolverSettings {
    SolverSettings {
        energy_tol: t.energy_tol,
        constraint_tol: t.constraint_tol,
        max_iterations: t.max_iterations,
        perturbation: t.perturbation,
        slack: t.near_wire_slack,
        seed,
        ..SolverSettings::default()
    }
}

struct Solved {
    lambda: f64,
    budget: f64,
    outcome: SolveOutcome,
    enclosure: Option<Enclosure>,
}

impl Solved {
    fn verified(&self) -> bool {
        let r = &self.outcome.report;
        r.converged && [r.hull_ok, r.kappa_ok, r.slicewise_ok, r.near_wire_ok].iter().all(|f| *f == Some(true))
    }

    fn row(&self) -> Vec<String> {
        let r = &self.outcome.report;
        let e = self.enclosure;
        vec![
            num(self.lambda),
            num(r.energy),
            num(r.area),
            num(r.thread_length),
            num(r.wire_segment),
            num(r.boundary_length),
            num(self.budget),
            num(r.boundary_length - self.budget),
            num(r.conformality),
            num(r.kappa),
            num(r.kappa_spread),
            opt(r.kappa_multiplier),
            opt(r.r_max),
            opt(e.map(|e| e.r1)),
            opt(e.map(|e| e.alpha)),
            opt(e.map(|e| e.r2)),
            opt(r.hull_margin),
            opt_flag(r.hull_ok),
            opt_flag(r.kappa_ok),
            opt_flag(r.slicewise_ok),
            opt_flag(r.near_wire_ok),
            r.iterations.to_string(),
            flag(r.converged),
        ]
    }
}

fn solve_point(wire: &Arc<WireCurve>, lambda: f64, rings: usize, sectors: usize, width: WidthRule, set: SolverSettings) -> Result<Solved, CliError> {
    let p0 = build_competitor_p0(wire.clone(), lambda, width, rings, sectors).map_err(solve_err)?;
    let problem = ThreadProblem::new(wire.clone(), lambda, set).map_err(solve_err)?;
    let outcome = minimize(&problem, &p0).map_err(solve_err)?;
    let chart = TubularChart::new(wire.clone(), 0.9).map_err(|e| CliError::Numerical(e.to_string()))?;
    let enclosure = match enclosure_probe(&outcome.crescent, &chart) {
        Ok(e) => Some(e),
        Err(SolveError::ChartExit { .. }) => None,
        Err(e) => return Err(solve_err(e)),
    };
    Ok(Solved { lambda, budget: problem.budget(), outcome, enclosure })
}

pub(super) fn solve(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let Task::Solve { lambda, rings, sectors, width, competitor_only, dump_mesh } = cfg.task else {
        unreachable!("dispatched on task kind")
    };
    let wire = wire(cfg)?;
    if competitor_only {
        return competitor(cfg, &wire, lambda, rings, sectors, width, dump_mesh);
    }
    let s = solve_point(&wire, lambda, rings, sectors, width, settings(&cfg.tolerances, cfg.seed))?;
    let mut t = Table::new(&SOLVE_COLUMNS);
    t.push(s.row());
    let verified = s.verified();
    let r = &s.outcome.report;
    let summary = vec![format!(
        "solve lambda={lambda}: D={:.6e} A={:.6e} kappa={:.4} converged={} verified={verified}",
        r.energy, r.area, r.kappa, r.converged
    )];
    let mut files = vec![(format!("{}.csv", cfg.stem), t.render(&cfg.digest, cfg.seed))];
    if dump_mesh {
        files.push((format!("{}_mesh.txt", cfg.stem), stamp(cfg, &s.outcome.crescent.ascii_dump())));
    }
    Ok(Artifacts { files, verified, summary })
}

fn competitor(
    cfg: &ExperimentConfig,
    wire: &Arc<WireCurve>,
    lambda: f64,
    rings: usize,
    sectors: usize,
    width: WidthRule,
    dump_mesh: bool,
) -> Result<Artifacts, CliError> {
    let tol = &cfg.tolerances;
    let p0 = build_competitor_p0(wire.clone(), lambda, width, rings, sectors).map_err(solve_err)?;
    let r = evaluate(&p0).map_err(solve_err)?;
    let kmax = wire.curvature_max().1;
    let energy_target = lambda / kmax;
    let energy_ok = (r.energy - energy_target).abs() <= tol.deficit_tol * energy_target;
    let length_target = wire.length() - lambda;
    let length_error = r.boundary_length - length_target;
    let length_ok = length_error.abs() <= tol.length_tol * wire.length();
    let mut t = Table::new(&COMPETITOR_COLUMNS);
    t.push(vec![
        num(lambda),
        num(r.wire_segment / 2.0),
        num(r.energy),
        num(r.area),
        num(energy_target),
        flag(energy_ok),
        num(r.boundary_length),
        num(length_target),
        num(length_error),
        flag(length_ok),
        num(r.conformality),
        num(verify_convex_hull(&p0).margin),
    ]);
    let summary = vec![format!(
        "competitor lambda={lambda}: D={:.6e} (target {energy_target:.6e}) length error={length_error:.3e}",
        r.energy
    )];
    let mut files = vec![(format!("{}.csv", cfg.stem), t.render(&cfg.digest, cfg.seed))];
    if dump_mesh {
        files.push((format!("{}_mesh.txt", cfg.stem), stamp(cfg, &p0.ascii_dump())));
    }
    Ok(Artifacts { files, verified: energy_ok && length_ok, summary })
}

pub(super) fn sweep(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let Task::Sweep { lambdas, rings, sectors, width } = &cfg.task else {
        unreachable!("dispatched on task kind")
    };
    let tol = &cfg.tolerances;
    let wire = wire(cfg)?;
    let set = settings(tol, cfg.seed);
    // collect keeps input order, so rows come out sorted by λ
    let points: Vec<Solved> = lambdas
        .par_iter()
        .map(|&l| solve_point(&wire, l, *rings, *sectors, *width, set.clone()))
        .collect::<Result<_, _>>()?;

    let mut t = Table::new(&SOLVE_COLUMNS);
    for p in &points {
        t.push(p.row());
    }
    let kmax = wire.curvature_max().1;
    let radii: Vec<(f64, f64)> = points.iter().filter_map(|p| Some((p.lambda, p.outcome.report.r_max?))).collect();
    let slope = if radii.len() == points.len() { fit_exponent(&radii).map(|f| f.0) } else { None };
    let slope_ok = slope.is_some_and(|s| (tol.slope_min..=tol.slope_max).contains(&s));
    let first = &points[0];
    let ratio = first.outcome.report.area / first.lambda;
    let area_ok = (ratio * kmax - 1.0).abs() <= tol.area_ratio_tol;
    let enclosure: Vec<(f64, f64)> = points.iter().filter_map(|p| p.enclosure.map(|e| (e.alpha, e.r2))).collect();
    let enclosure_exponent = fit_exponent(&enclosure).map(|f| f.0);
    let rows_ok = points.iter().all(Solved::verified);

    t.note(format!("kappa_max={}", num(kmax)));
    t.note(format!("r_max_slope={} slope_min={} slope_max={} slope_ok={slope_ok}", opt(slope), num(tol.slope_min), num(tol.slope_max)));
    t.note(format!(
        "area_ratio={} lambda_min={} target={} area_tol={} area_ok={area_ok}",
        num(ratio),
        num(first.lambda),
        num(1.0 / kmax),
        num(tol.area_ratio_tol)
    ));
    t.note(format!("enclosure_exponent={}", opt(enclosure_exponent)));
    t.note(format!("rows_ok={rows_ok}"));

    let summary = vec![
        format!("sweep over {} deficits on a {rings}x{sectors} mesh", points.len()),
        format!("r_max slope {} (expected {}..{}), ok={slope_ok}", opt(slope), tol.slope_min, tol.slope_max),
        format!("A/lambda at lambda={} is {ratio:.4} (1/kappa_max = {:.4}), ok={area_ok}", first.lambda, 1.0 / kmax),
        format!("verification checks on every solve: {rows_ok}"),
    ];
    Ok(Artifacts {
        files: vec![(format!("{}.csv", cfg.stem), t.render(&cfg.digest, cfg.seed))],
        verified: slope_ok && area_ok && rows_ok,
        summary,
    })
}
