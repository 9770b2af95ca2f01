use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use threadwire::harmlevel::{
    extract_level_graph, hls_classify, sign_changes, solve_harmonic, vanishing_order, DiscField, DiscMesh, NodeKind,
};

use super::harm_err;
use crate::config::{ExperimentConfig, Task};
use crate::csv::{flag, num, Table};
use crate::{Artifacts, CliError};

pub(super) fn rado(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let Task::Rado { degrees, rings, sectors } = &cfg.task else {
        unreachable!("dispatched on task kind")
    };
    let mesh = Arc::new(DiscMesh::new(*rings, *sectors).map_err(harm_err)?);
    let rows: Vec<(usize, usize, usize, usize, f64)> = degrees
        .par_iter()
        .map(|&k| {
            // Re z^k on the unit circle
            let f = solve_harmonic(mesh.clone(), |t| (k as f64 * t).cos()).map_err(harm_err)?;
            let o = vanishing_order(&f, [0.0, 0.0]).map_err(harm_err)?;
            let sc = sign_changes(&f, 0.0).map_err(harm_err)?;
            Ok((k, o.order, sc, o.valence, o.residual))
        })
        .collect::<Result<_, CliError>>()?;
    let mut t = Table::new(&["degree", "order", "sign_changes", "valence", "fit_residual", "holds"]);
    let mut all = true;
    for &(k, m, sc, val, res) in &rows {
        let holds = m + 1 == k && sc == 2 * (m + 1);
        all &= holds;
        t.push(vec![k.to_string(), m.to_string(), sc.to_string(), val.to_string(), num(res), flag(holds)]);
    }
    t.note(format!("all_hold={all}"));
    Ok(Artifacts {
        files: vec![(format!("{}.csv", cfg.stem), t.render(&cfg.digest, cfg.seed))],
        verified: all,
        summary: vec![format!("Re z^k for k in {degrees:?} on a {rings}x{sectors} mesh: all hold = {all}")],
    })
}

/// Fourier data `Σ_{k ≤ modes} a_k cos kθ + b_k sin kθ` with uniform coefficients.
fn fourier(rng: &mut impl Rng, modes: usize) -> impl Fn(f64) -> f64 {
    let c: Vec<(f64, f64)> = (0..=modes).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    move |t| c.iter().enumerate().map(|(k, (a, b))| a * (k as f64 * t).cos() + b * (k as f64 * t).sin()).sum()
}

/// Edge-connected components of `{h > a}` and `{h < a}` over the mesh
/// vertices, and whether all of them meet the boundary circle.
pub(crate) fn sign_regions(field: &DiscField, a: f64) -> (usize, bool) {
    let mesh = &field.mesh;
    let adj = mesh.neighbors();
    let above = |v: usize| field.values[v] > a;
    let mut seen = vec![false; mesh.vertex_count()];
    let (mut regions, mut all_reach) = (0, true);
    for start in 0..mesh.vertex_count() {
        if seen[start] {
            continue;
        }
        regions += 1;
        seen[start] = true;
        let mut stack = vec![start];
        let mut reaches = false;
        while let Some(v) = stack.pop() {
            reaches |= mesh.is_boundary(v);
            for &u in &adj[v] {
                if !seen[u] && above(u) == above(start) {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        all_reach &= reaches;
    }
    (regions, all_reach)
}

/// A level strictly inside the boundary range, away from every vertex value.
fn generic_level(field: &DiscField, rng: &mut impl Rng) -> Option<f64> {
    let (lo, hi) = field.boundary_range();
    let gap = 1e-7 * field.scale();
    (0..1000).map(|_| lo + (hi - lo) * rng.random_range(0.05..0.95)).find(|a| field.values.iter().all(|v| (v - a).abs() > gap))
}

struct LevelRow {
    monotone: bool,
    level: f64,
    components: usize,
    cycles: usize,
    interior_nodes: usize,
    valences_ok: bool,
    boundary_hits: usize,
    regions: usize,
    acyclic: bool,
    hypothesis_a: bool,
    hypothesis_b: bool,
    lower_hits: usize,
    conclusions: Option<bool>,
}

impl LevelRow {
    /// `1 + B - R`: the count a level forest must have.
    fn oracle(&self) -> i64 {
        1 + self.boundary_hits as i64 - self.regions as i64
    }

    fn ok(&self) -> bool {
        self.acyclic && self.valences_ok && self.oracle() == self.components as i64 && self.conclusions != Some(false)
    }
}

pub(super) fn levelset(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let Task::LevelSet { fields, rings, sectors, modes } = cfg.task else {
        unreachable!("dispatched on task kind")
    };
    let mesh = Arc::new(DiscMesh::new(rings, sectors).map_err(harm_err)?);
    let rows: Vec<LevelRow> = (0..fields)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            // every other field is monotone along the upper arc so the
            // count/shape hypotheses get exercised
            let monotone = i % 2 == 1;
            let data = fourier(&mut rng, modes);
            let field = if monotone {
                let eps = rng.random_range(0.0..0.15);
                solve_harmonic(mesh.clone(), |t| t.cos() + eps * data(t) * t.sin().min(0.0).powi(2))
            } else {
                solve_harmonic(mesh.clone(), data)
            }
            .map_err(harm_err)?;
            let a = generic_level(&field, &mut rng).ok_or_else(|| CliError::Numerical(format!("field {i}: no generic level found")))?;
            let g = extract_level_graph(&field, a).map_err(harm_err)?;
            let (regions, reach) = sign_regions(&field, a);
            let interior: Vec<_> = g.nodes.iter().filter(|n| n.kind == NodeKind::Interior).collect();
            let report = hls_classify(&field, a, |_| true);
            let hyps = report.hypothesis_a && report.hypothesis_b;
            Ok(LevelRow {
                monotone,
                level: a,
                components: g.components,
                cycles: g.cycles,
                interior_nodes: interior.len(),
                valences_ok: interior.iter().all(|n| n.valence >= 4 && n.valence % 2 == 0),
                boundary_hits: g.points.iter().filter(|p| p.boundary.is_some()).count(),
                regions,
                acyclic: g.cycles == 0 && reach,
                hypothesis_a: report.hypothesis_a,
                hypothesis_b: report.hypothesis_b,
                lower_hits: report.lower_hits,
                conclusions: hyps.then(|| report.conclusions_hold()),
            })
        })
        .collect::<Result<_, CliError>>()?;

    let mut t = Table::new(&[
        "field",
        "data",
        "level",
        "components",
        "cycles",
        "interior_nodes",
        "valences_ok",
        "boundary_hits",
        "sign_regions",
        "oracle_components",
        "oracle_ok",
        "acyclic",
        "hypothesis_a",
        "hypothesis_b",
        "lower_hits",
        "conclusions",
    ]);
    for (i, r) in rows.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            if r.monotone { "monotone" } else { "random" }.into(),
            num(r.level),
            r.components.to_string(),
            r.cycles.to_string(),
            r.interior_nodes.to_string(),
            flag(r.valences_ok),
            r.boundary_hits.to_string(),
            r.regions.to_string(),
            r.oracle().to_string(),
            flag(r.oracle() == r.components as i64),
            flag(r.acyclic),
            flag(r.hypothesis_a),
            flag(r.hypothesis_b),
            r.lower_hits.to_string(),
            r.conclusions.map_or_else(|| "na".into(), flag),
        ]);
    }
    let count = |f: &dyn Fn(&LevelRow) -> bool| rows.iter().filter(|r| f(r)).count();
    let applicable = count(&|r| r.conclusions.is_some());
    let all_ok = rows.iter().all(LevelRow::ok);
    t.note(format!(
        "fields={fields} acyclic={} valences_ok={} oracle_ok={} hypotheses_met={applicable} conclusions_ok={} all_ok={all_ok}",
        count(&|r| r.acyclic),
        count(&|r| r.valences_ok),
        count(&|r| r.oracle() == r.components as i64),
        count(&|r| r.conclusions == Some(true)),
    ));
    Ok(Artifacts {
        files: vec![(format!("{}.csv", cfg.stem), t.render(&cfg.digest, cfg.seed))],
        verified: all_ok,
        summary: vec![format!("{fields} level sets on a {rings}x{sectors} mesh ({applicable} met both hypotheses): all ok = {all_ok}")],
    })
}
