use std::f64::consts::TAU;

use rayon::prelude::*;
use threadwire::curvegeom::{curve_csv, genericity_check, polyline_and_pipe, TubularChart};

use super::{curve_err, stamp, wire};
use crate::config::{ExperimentConfig, Task};
use crate::csv::{flag, num, Table};
use crate::{Artifacts, CliError};

/// Fractional parts of `i·α` for three irrational `α`: evenly spread chart samples.
fn chart_sample(i: usize) -> (f64, f64, f64) {
    let f = |a: f64| (i as f64 * a).fract();
    (f(0.618_033_988_749_895), f(0.414_213_562_373_095), f(0.732_050_807_568_877))
}

/// Successive ratios move in one direction with shrinking steps.
fn monotone_converging(r: &[f64]) -> bool {
    let tol = 1e-9 * r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let d: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
    let one_way = d.iter().all(|&x| x >= -tol) || d.iter().all(|&x| x <= tol);
    let shrinking = d.windows(2).all(|w| w[1].abs() <= w[0].abs() + tol);
    one_way && shrinking
}

pub(super) fn curve_check(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let Task::CurveCheck { eps, chart_points, export } = &cfg.task else {
        unreachable!("dispatched on task kind")
    };
    let tol = &cfg.tolerances;
    let wire = wire(cfg)?;
    let chart = TubularChart::new(wire.clone(), 0.9).map_err(curve_err)?;
    let frame = chart.frame();
    let residual = frame.ode_residual(&wire);
    let defect = frame.orthonormality_defect(&wire);
    let roundtrip = (0..*chart_points)
        .into_par_iter()
        .map(|i| {
            let (u, v, w) = chart_sample(i);
            let (s, r, th) = (u * wire.length(), v * chart.radius(), w * TAU);
            let p = chart.exp_map(s, r * th.cos(), r * th.sin()).map_err(curve_err)?.point;
            let q = chart.project_psi(&p).map_err(curve_err)?;
            Ok((chart.exp_map(q.s, q.x, q.y).map_err(curve_err)?.point - p).norm())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;

    let kmax = wire.curvature_max().1;
    let bound = kmax / 8.0 * (1.0 + tol.pipe_slack);
    let mut order = eps.clone();
    order.sort_by(|a, b| b.total_cmp(a));
    let mut t = Table::new(&["eps", "deviation", "ratio", "bound", "ratio_ok"]);
    let mut ratios = Vec::with_capacity(order.len());
    for &e in &order {
        let (_, dev) = polyline_and_pipe(&wire, e).map_err(|err| CliError::Config(format!("eps {e}: {err}")))?;
        let ratio = dev / (e * e);
        ratios.push(ratio);
        t.push(vec![num(e), num(dev), num(ratio), num(bound), flag(ratio <= bound)]);
    }
    let converging = monotone_converging(&ratios);
    let ratios_ok = ratios.iter().all(|&r| r <= bound);
    let frame_ok = residual <= tol.frame_tol && defect <= tol.frame_tol;
    let roundtrip_ok = roundtrip <= tol.roundtrip_tol;
    let g = genericity_check(&wire);

    t.note(format!("length={} kappa_max={} simple_radius={}", num(wire.length()), num(kmax), num(chart.simple_radius())));
    t.note(format!("frame_residual={} orthonormality_defect={} frame_ok={frame_ok}", num(residual), num(defect)));
    t.note(format!("chart_points={chart_points} roundtrip_max={} roundtrip_ok={roundtrip_ok}", num(roundtrip)));
    t.note(format!("pipe_monotone_converging={converging} pipe_ratios_ok={ratios_ok}"));
    t.note(format!(
        "generic={} c4={} curvature_nonvanishing={} curvature_morse={} torsion_transverse={} torsion_nonzero_at_critical={} curvature_critical_points={} torsion_zeros={}",
        g.generic(),
        g.c4,
        g.curvature_nonvanishing,
        g.curvature_morse,
        g.torsion_transverse,
        g.torsion_nonzero_at_critical,
        g.curvature_critical_points,
        g.torsion_zeros
    ));

    let verified = frame_ok && roundtrip_ok && converging && ratios_ok;
    let mut files = vec![(format!("{}.csv", cfg.stem), t.render(&cfg.digest, cfg.seed))];
    if *export {
        files.push((format!("{}_samples.csv", cfg.stem), stamp(cfg, &curve_csv(&wire))));
    }
    let summary = vec![
        format!("frame residual {residual:.2e}, orthonormality {defect:.2e}, round trip {roundtrip:.2e}"),
        format!("pipe deviation / eps^2: {ratios:?} against {bound:.6}"),
        format!("generic wire: {}", g.generic()),
    ];
    Ok(Artifacts { files, verified, summary })
}
