use std::sync::Arc;

use super::{evaluate, CrescentMesh, Result, SolveError, SolveReport};
use crate::curvegeom::{PsiPoint, TubularChart};
use crate::harmlevel::{extract_level_graph, BoundaryArc, DiscField, NodeKind, PointLoc};
use crate::hull::Hull;
use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct KappaEstimate {
    /// Median signed curvature over interior thread vertices; positive
    /// when the thread bends toward its outer side-normal.
    pub kappa: f64,
    /// Interquartile range over `|kappa|`.
    pub spread: f64,
    /// Mean angle (radians) between the curvature vector and the surface tangent plane.
    pub alignment: f64,
    pub values: Vec<f64>,
    /// `spread > 0.5`.
    pub unstable: bool,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let x = q * (sorted.len() - 1) as f64;
    let (i, f) = (x.floor() as usize, x.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

/// Circumscribed-circle curvature at every interior thread vertex, signed
/// against the outer side-normal `ν` (tangent to the surface, normal to the
/// thread, pointing away from the surface).
pub fn extract_kappa(c: &CrescentMesh) -> Result<KappaEstimate> {
    let verts = c.thread_vertices();
    if verts.len() < 8 {
        return Err(SolveError::ShortThread(verts.len()));
    }
    let pos = c.positions();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); pos.len()];
    for (ti, t) in c.mesh().triangles().iter().enumerate() {
        for &v in t {
            incident[v].push(ti);
        }
    }
    let mesh = c.mesh();
    let tris = mesh.triangles();
    let mut values = Vec::with_capacity(verts.len() - 2);
    let mut angles = 0.0;
    let mut bent = 0usize;
    for m in 1..verts.len() - 1 {
        let (p0, p1, p2) = (pos[verts[m - 1]], pos[verts[m]], pos[verts[m + 1]]);
        let (a, b, d) = ((p1 - p0).norm(), (p2 - p1).norm(), (p2 - p0).norm());
        let cross = (p1 - p0).cross(&(p2 - p0)).norm();
        if cross <= 1e-12 * a * d {
            values.push(0.0);
            continue;
        }
        let mag = 2.0 * cross / (a * b * d);
        // direction from p1 to the circumcentre
        let (u, w) = (p0 - p1, p2 - p1);
        let uw = u.cross(&w);
        let bend = (w * u.norm_squared() - u * w.norm_squared()).cross(&uw);
        let mut normal = Vec3::zeros();
        for &ti in &incident[verts[m]] {
            let t = tris[ti];
            normal += (pos[t[1]] - pos[t[0]]).cross(&(pos[t[2]] - pos[t[0]]));
        }
        // the ring neighbour just inside the thread fixes which side is the surface
        let (i, j) = mesh.ring_sector(verts[m]);
        let inward = pos[mesh.vertex(i - 1, j)] - p1;
        let mut nu = (p2 - p0).cross(&normal);
        if nu.dot(&inward) > 0.0 {
            nu = -nu;
        }
        let nu = nu.try_normalize(0.0).unwrap_or_else(Vec3::zeros);
        let sign = bend.dot(&nu);
        values.push(if mag.is_finite() && sign != 0.0 { mag * sign.signum() } else { 0.0 });
        if let (Some(bn), Some(n)) = (bend.try_normalize(1e-300), normal.try_normalize(1e-300)) {
            angles += bn.dot(&n).abs().clamp(0.0, 1.0).asin();
            bent += 1;
        }
    }
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let kappa = quantile(&sorted, 0.5);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr == 0.0 { 0.0 } else { iqr / kappa.abs() };
    Ok(KappaEstimate { kappa, spread, alignment: if bent == 0 { 0.0 } else { angles / bent as f64 }, values, unstable: !(spread <= 0.5) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullCheck {
    /// Largest signed distance of a surface vertex outside the hull.
    pub margin: f64,
    pub tolerance: f64,
    pub holds: bool,
    /// The attached segment is collinear (or a point).
    pub degenerate: bool,
}

/// Convex hull of the attached segment: dense wire samples plus the
/// lower-arc vertices.
pub fn verify_convex_hull(c: &CrescentMesh) -> HullCheck {
    let (a, b) = c.wire_segment();
    let mut pts = c.wire().sample_range(a, b, 400);
    pts.extend((0..c.attachment().len()).map(|k| c.positions()[c.lower_vertex(k)]));
    let hull = Hull::new(&pts);
    let degenerate = matches!(hull, Hull::Empty | Hull::Point(_) | Hull::Segment(..));
    let diam = pts.iter().map(|p| (p - pts[0]).norm()).fold(0.0, f64::max);
    let tolerance = 1e-6 * diam.max(f64::MIN_POSITIVE);
    let margin = c.positions().iter().map(|p| hull.signed_distance(p)).fold(f64::NEG_INFINITY, f64::max);
    HullCheck { margin, tolerance, holds: margin <= tolerance, degenerate }
}

/// Tube coordinates of every vertex. Each projection starts from the
/// nearest of a dense set of samples around the attached segment, and `s`
/// is unwrapped next to that start on closed wires.
pub fn tube_radii(c: &CrescentMesh, chart: &TubularChart) -> Result<Vec<PsiPoint>> {
    let wire = chart.wire();
    let (a, b) = c.wire_segment();
    let pad = 0.5 * (b - a) + 4.0 * wire.spacing();
    let (lo, hi) = if wire.is_closed() { (a - pad, b + pad) } else { ((a - pad).max(0.0), (b + pad).min(wire.length())) };
    let n = 400;
    let probes: Vec<(f64, Vec3)> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).map(|s| (s, wire.point(s))).collect();
    let lower: std::collections::HashMap<usize, f64> =
        (0..c.attachment().len()).map(|k| (c.lower_vertex(k), c.attachment()[k])).collect();
    let len = wire.length();
    c.positions()
        .iter()
        .enumerate()
        .map(|(v, p)| {
            let hint = match lower.get(&v) {
                Some(&t) => t,
                None => probes.iter().min_by(|x, y| (x.1 - p).norm_squared().total_cmp(&(y.1 - p).norm_squared())).unwrap().0,
            };
            let mut psi = chart.project_near(p, Some(hint)).map_err(|source| SolveError::ChartExit { vertex: v, source })?;
            if wire.is_closed() {
                psi.s += ((hint - psi.s) / len).round() * len;
            }
            if let Some(&t) = lower.get(&v) {
                psi.s = t;
            }
            Ok(psi)
        })
        .collect()
}

/// `ŝ = s ∘ Ψ ∘ X` at every vertex.
pub fn pulled_back_arclength(c: &CrescentMesh, chart: &TubularChart) -> Result<Vec<f64>> {
    Ok(tube_radii(c, chart)?.into_iter().map(|p| p.s).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearWireCheck {
    pub r_max: f64,
    pub r_bound: f64,
    pub area: f64,
    pub area_bound: f64,
    pub radius_ok: bool,
    pub area_ok: bool,
}

/// `r_max ≤ (2λ/(πκ_max))^½ (1+slack)` and `A ≤ λ/κ_max (1+slack)`.
pub fn verify_near_wire(c: &CrescentMesh, chart: &TubularChart, lambda: f64, slack: f64) -> Result<NearWireCheck> {
    let r_max = tube_radii(c, chart)?.iter().map(|p| p.r).fold(0.0, f64::max);
    let (_, kmax) = c.wire().curvature_max();
    let r_bound = (2.0 * lambda / (std::f64::consts::PI * kmax)).sqrt() * (1.0 + slack);
    let area = c.area();
    let area_bound = lambda / kmax * (1.0 + slack);
    Ok(NearWireCheck { r_max, r_bound, area, area_bound, radius_ok: r_max <= r_bound, area_ok: area <= area_bound })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlicewiseVerdict {
    pub holds: bool,
    pub slices: usize,
    /// Offending level and the reason.
    pub failures: Vec<(f64, String)>,
    /// The end levels are the two corner points alone.
    pub corners_ok: bool,
    /// Levels just outside the attached segment are empty.
    pub outside_empty: bool,
}

/// Level sets of `ŝ` on the disc must be single arcs from the lower to the
/// upper boundary, degenerating to the corners at the segment ends.
pub fn verify_slicewise(c: &CrescentMesh, chart: &TubularChart, slices: usize) -> Result<SlicewiseVerdict> {
    let mesh = c.mesh().clone();
    let values = pulled_back_arclength(c, chart)?;
    let field = DiscField::new(Arc::clone(&mesh), values)?;
    let (a, b) = c.wire_segment();
    let mut failures = Vec::new();
    for m in 1..=slices {
        let s = a + (b - a) * m as f64 / (slices + 1) as f64;
        let g = match extract_level_graph(&field, s) {
            Ok(g) => g,
            Err(e) => {
                failures.push((s, e.to_string()));
                continue;
            }
        };
        let count = |k: NodeKind| g.nodes.iter().filter(|n| n.kind == k).count();
        let (lo, up, inner) = (count(NodeKind::LowerBoundary), count(NodeKind::UpperBoundary), count(NodeKind::Interior));
        if g.components != 1 || g.cycles != 0 || lo != 1 || up != 1 || inner != 0 || g.edges.len() != 1 {
            failures.push((
                s,
                format!("{} components, {} cycles, nodes lower/upper/interior {lo}/{up}/{inner}", g.components, g.cycles),
            ));
        }
    }
    let corner_at = |level: f64, v: usize| -> bool {
        match extract_level_graph(&field, level) {
            Ok(g) => g.points.len() == 1 && g.points[0].loc == PointLoc::Vertex(v) && g.points[0].boundary == Some(BoundaryArc::Lower),
            Err(_) => false,
        }
    };
    let (rings, sectors) = (mesh.rings(), mesh.sectors());
    let corners_ok = corner_at(a, mesh.vertex(rings, sectors / 2)) && corner_at(b, mesh.vertex(rings, 0));
    let eps = 1e-3 * (b - a);
    let outside_empty = [a - eps, b + eps].iter().all(|&s| extract_level_graph(&field, s).map(|g| g.is_empty()).unwrap_or(false));
    Ok(SlicewiseVerdict { holds: failures.is_empty() && corners_ok && outside_empty, slices, failures, corners_ok, outside_empty })
}

/// `(r1, α, r2)`: largest boundary radius, Dirichlet energy, largest radius overall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enclosure {
    pub r1: f64,
    pub alpha: f64,
    pub r2: f64,
}

pub fn enclosure_probe(c: &CrescentMesh, chart: &TubularChart) -> Result<Enclosure> {
    let radii = tube_radii(c, chart)?;
    let mesh = c.mesh();
    let r1 = (0..radii.len()).filter(|&v| mesh.is_boundary(v)).map(|v| radii[v].r).fold(0.0, f64::max);
    let r2 = radii.iter().map(|p| p.r).fold(0.0, f64::max);
    Ok(Enclosure { r1, alpha: c.energy(), r2 })
}

/// Least-squares `(slope, intercept)` of `log y` against `log x`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let logs: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let (mx, my) = (logs.iter().map(|p| p.0).sum::<f64>() / n, logs.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// [`evaluate`] plus every verification flag.
pub fn verify_all(c: &CrescentMesh, chart: &TubularChart, lambda: f64, slack: f64) -> Result<SolveReport> {
    let mut r = evaluate(c)?;
    let hull = verify_convex_hull(c);
    r.hull_margin = Some(hull.margin);
    r.hull_ok = Some(hull.holds);
    r.kappa_ok = Some(r.kappa >= -1e-3);
    match verify_near_wire(c, chart, lambda, slack) {
        Ok(n) => {
            r.r_max = Some(n.r_max);
            r.near_wire_ok = Some(n.radius_ok && n.area_ok);
        }
        Err(SolveError::ChartExit { .. }) => r.near_wire_ok = Some(false),
        Err(e) => return Err(e),
    }
    r.slicewise_ok = Some(match verify_slicewise(c, chart, 50) {
        Ok(v) => v.holds,
        Err(SolveError::ChartExit { .. }) => false,
        Err(e) => return Err(e),
    });
    Ok(r)
}
