use super::field::{DiscField, ZERO_TOL};
use super::level::{extract_level_graph, LevelGraph, NodeKind, PointLoc};
use super::mesh::{BoundaryArc, DiscMesh};
use super::HarmError;
use crate::hull::hull_2d;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    /// A single level point on the lower arc.
    LowerPoint,
    /// Acyclic graph reaching the disc interior.
    Tree,
    /// Runs along the upper arc.
    ContainsUpper,
    /// Contains a closed loop.
    Cyclic,
    /// Anything else: an isolated upper or interior point, or a graph
    /// with no boundary contact.
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentVerdict {
    pub kind: ComponentKind,
    pub lower_nodes: usize,
    pub upper_nodes: usize,
    pub interior_nodes: usize,
    /// Every interior node has even valence of at least 4.
    pub valences_ok: bool,
}

impl ComponentVerdict {
    /// The component has one of the shapes allowed by the level-set classification.
    pub fn admissible(&self) -> bool {
        match self.kind {
            ComponentKind::LowerPoint => true,
            ComponentKind::Tree => self.valences_ok && self.lower_nodes >= 1 && self.upper_nodes <= 1,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HlsReport {
    pub level: f64,
    /// `h` is nonconstant on the upper arc and no open-upper-arc vertex is a
    /// strict local extremum among its mesh neighbors.
    pub hypothesis_a: bool,
    /// Finitely many level points on the lower arc (no run along it).
    pub hypothesis_b: bool,
    /// Level points on the lower arc within the selection.
    pub lower_hits: usize,
    pub components: Vec<ComponentVerdict>,
    /// Component count does not exceed `lower_hits`.
    pub count_ok: bool,
    /// The level set contained a plateau and was not traced.
    pub degenerate: bool,
}

impl HlsReport {
    /// Count and shape conclusions, meaningful when both hypotheses verify.
    pub fn conclusions_hold(&self) -> bool {
        !self.degenerate && self.count_ok && self.components.iter().all(|c| c.admissible())
    }
}

fn component_verdicts(g: &LevelGraph, keep: &[bool]) -> Vec<ComponentVerdict> {
    let mut out = Vec::new();
    for c in 0..g.components {
        if !keep[c] {
            continue;
        }
        let nodes: Vec<_> = g.component_nodes(c).collect();
        let count = |k: NodeKind| nodes.iter().filter(|n| n.kind == k).count();
        let (lower, upper, interior) = (count(NodeKind::LowerBoundary), count(NodeKind::UpperBoundary), count(NodeKind::Interior));
        let valences_ok = nodes.iter().filter(|n| n.kind == NodeKind::Interior).all(|n| n.valence >= 4 && n.valence % 2 == 0);
        let n_points = g.points.iter().filter(|p| p.component == c).count();
        let n_segs = g.segments.iter().filter(|(p, _)| g.points[*p].component == c).count();
        let kind = if n_segs + 1 > n_points {
            ComponentKind::Cyclic
        } else if g.runs_along(c, BoundaryArc::Upper) {
            ComponentKind::ContainsUpper
        } else if n_points == 1 && lower == 1 {
            ComponentKind::LowerPoint
        } else if n_segs > 0 && lower + upper > 0 {
            ComponentKind::Tree
        } else {
            ComponentKind::Other
        };
        out.push(ComponentVerdict { kind, lower_nodes: lower, upper_nodes: upper, interior_nodes: interior, valences_ok });
    }
    out
}

fn upper_hypothesis(field: &DiscField) -> bool {
    let mesh = &*field.mesh;
    let upper = mesh.upper_arc();
    let tol = ZERO_TOL * field.scale();
    let vals: Vec<f64> = upper.iter().map(|&v| field.values[v]).collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let corners = [mesh.vertex(mesh.rings(), 0), mesh.vertex(mesh.rings(), mesh.sectors() / 2)].map(|v| field.values[v]);
    let nonconstant = hi - lo > tol || corners.iter().any(|c| (c - lo).abs() > tol);
    let adj = mesh.neighbors();
    let no_extremum = upper.iter().all(|&v| {
        let h = field.values[v];
        let above = adj[v].iter().any(|&u| field.values[u] > h + tol);
        let below = adj[v].iter().any(|&u| field.values[u] < h - tol);
        above && below
    });
    nonconstant && no_extremum
}

/// Classifies the components of `h = a` that meet the region `select`.
pub fn hls_classify(field: &DiscField, a: f64, select: impl Fn(&[f64; 2]) -> bool) -> HlsReport {
    let hypothesis_a = upper_hypothesis(field);
    let graph = match extract_level_graph(field, a) {
        Ok(g) => g,
        Err(_) => {
            return HlsReport {
                level: a,
                hypothesis_a,
                hypothesis_b: false,
                lower_hits: 0,
                components: Vec::new(),
                count_ok: false,
                degenerate: true,
            }
        }
    };
    let keep: Vec<bool> = (0..graph.components).map(|c| graph.points.iter().any(|p| p.component == c && select(&p.pos))).collect();
    let hypothesis_b = !(0..graph.components).any(|c| keep[c] && graph.runs_along(c, BoundaryArc::Lower));
    let lower_hits = graph
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::LowerBoundary && keep[n.component])
        .count();
    let components = component_verdicts(&graph, &keep);
    let count_ok = components.len() <= lower_hits;
    HlsReport { level: a, hypothesis_a, hypothesis_b, lower_hits, components, count_ok, degenerate: false }
}

/// Result of intersecting a crescent with a planar window.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneCrescentReport {
    /// Wire crossings with the window.
    pub wire_hits: usize,
    pub components: Vec<ComponentVerdict>,
    pub count_ok: bool,
    /// `F∘X` is constant at the plane offset on a region.
    pub degenerate: bool,
    /// Smallest distance between the traced intersection and the window boundary.
    pub boundary_clearance: f64,
}

/// In-plane coordinates for a plane with unit normal `n`.
fn plane_basis(n: &Vec3) -> (Vec3, Vec3) {
    let trial = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = (trial - n * trial.dot(n)).normalize();
    (u, n.cross(&u))
}

fn point_in_polygon(poly: &[[f64; 2]], q: [f64; 2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > q[1]) != (b[1] > q[1]) {
            let x = a[0] + (q[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if q[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn polygon_boundary_distance(poly: &[[f64; 2]], q: [f64; 2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let len2 = ex * ex + ey * ey;
            let t = if len2 > 0.0 { (((q[0] - a[0]) * ex + (q[1] - a[1]) * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
            (q[0] - a[0] - t * ex).hypot(q[1] - a[1] - t * ey)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Classifies the components of `X⁻¹(W)` for a window `W` in the plane
/// `<F, p> = a`. `window` lists the polygon vertices (in the plane);
/// `wire` is a dense sampling of the wire used to count its crossings
/// with `W`.
pub fn plane_crescent_classify(
    mesh: std::sync::Arc<DiscMesh>,
    positions: &[Vec3],
    normal: Vec3,
    offset: f64,
    window: &[Vec3],
    wire: &[Vec3],
    wire_closed: bool,
) -> Result<PlaneCrescentReport, HarmError> {
    let f = normal.normalize();
    let (u, v) = plane_basis(&f);
    let to2 = |p: &Vec3| [p.dot(&u), p.dot(&v)];
    let poly: Vec<[f64; 2]> = window.iter().map(to2).collect();
    if poly.len() < 3 {
        return Err(HarmError::Invalid("window needs at least 3 vertices".into()));
    }
    let _ = hull_2d; // windows may be nonconvex; only simplicity is assumed

    let mut wire_hits = 0;
    let segs = if wire_closed { wire.len() } else { wire.len().saturating_sub(1) };
    for i in 0..segs {
        let (p, q) = (wire[i], wire[(i + 1) % wire.len()]);
        let (dp, dq) = (f.dot(&p) - offset, f.dot(&q) - offset);
        if (dp > 0.0) != (dq > 0.0) || dq == 0.0 {
            if dq == 0.0 && dp == 0.0 {
                continue;
            }
            let t = dp / (dp - dq);
            let x = p + (q - p) * t;
            if point_in_polygon(&poly, to2(&x)) {
                wire_hits += 1;
            }
        }
    }

    let h: Vec<f64> = positions.iter().map(|p| f.dot(p)).collect();
    let field = DiscField::new(mesh, h)?;
    let graph = match extract_level_graph(&field, offset) {
        Ok(g) => g,
        Err(HarmError::Plateau { .. }) => {
            return Ok(PlaneCrescentReport { wire_hits, components: Vec::new(), count_ok: false, degenerate: true, boundary_clearance: 0.0 })
        }
        Err(e) => return Err(e),
    };
    let image = |loc: &PointLoc| match *loc {
        PointLoc::Vertex(v) => positions[v],
        PointLoc::Edge(a, b, t) => positions[a] * (1.0 - t) + positions[b] * t,
    };
    let mut keep = vec![false; graph.components];
    let mut outside = vec![false; graph.components];
    let mut clearance = f64::INFINITY;
    for p in &graph.points {
        let q = to2(&image(&p.loc));
        clearance = clearance.min(polygon_boundary_distance(&poly, q));
        if point_in_polygon(&poly, q) {
            keep[p.component] = true;
        } else {
            outside[p.component] = true;
        }
    }
    let scale = positions.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1.0);
    if keep.iter().zip(&outside).any(|(k, o)| *k && *o) || clearance <= 1e-9 * scale {
        return Err(HarmError::TouchesWindowBoundary(clearance));
    }
    let components = component_verdicts(&graph, &keep);
    let count_ok = components.len() <= wire_hits;
    Ok(PlaneCrescentReport { wire_hits, components, count_ok, degenerate: false, boundary_clearance: clearance })
}
