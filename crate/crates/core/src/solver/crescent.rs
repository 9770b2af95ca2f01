use std::fmt::Write as _;
use std::sync::Arc;

use super::{Result, SolveError};
use crate::curvegeom::WireCurve;
use crate::harmlevel::assemble_interior;
use crate::harmlevel::DiscMesh;
use crate::Vec3;

/// Reference shape of one triangle, with its vertices at `(0, 0)`,
/// `(q1x, 0)` and `(q2x, q2y)`. `normal` orients it in space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefTriangle {
    pub q1x: f64,
    pub q2x: f64,
    pub q2y: f64,
    pub normal: Vec3,
}

impl RefTriangle {
    pub fn from_points(p0: Vec3, p1: Vec3, p2: Vec3) -> Self {
        let (e1, e2) = (p1 - p0, p2 - p0);
        let q1x = e1.norm();
        let n = e1.cross(&e2);
        RefTriangle { q1x, q2x: e2.dot(&e1) / q1x, q2y: n.norm() / q1x, normal: n.normalize() }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.q1x * self.q2y
    }

    fn corners(&self) -> [[f64; 2]; 3] {
        [[0.0, 0.0], [self.q1x, 0.0], [self.q2x, self.q2y]]
    }

    /// `2·area / (longest edge)²`.
    pub fn quality(&self) -> f64 {
        let p = self.corners();
        let longest = (0..3)
            .map(|k| {
                let (a, b) = (p[k], p[(k + 1) % 3]);
                (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
            })
            .fold(0.0, f64::max);
        2.0 * self.area() / longest
    }

    /// Cotangent of the angle at each corner.
    pub fn cotans(&self) -> [f64; 3] {
        let p = self.corners();
        let area2 = 2.0 * self.area();
        std::array::from_fn(|k| {
            let (o, a, b) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            ((a[0] - o[0]) * (b[0] - o[0]) + (a[1] - o[1]) * (b[1] - o[1])) / area2
        })
    }

    /// `self + beta (other - self)` in shape, with the normal blended likewise.
    pub fn lerp(&self, other: &RefTriangle, beta: f64) -> Self {
        let mix = |a: f64, b: f64| a + beta * (b - a);
        RefTriangle {
            q1x: mix(self.q1x, other.q1x),
            q2x: mix(self.q2x, other.q2x),
            q2y: mix(self.q2y, other.q2y),
            normal: (self.normal + (other.normal - self.normal) * beta).normalize(),
        }
    }

    fn is_valid(&self) -> bool {
        self.q1x > 0.0 && self.q2y > 0.0 && self.q1x.is_finite() && self.q2x.is_finite() && self.q2y.is_finite()
    }
}

/// Per-triangle reference shapes of an embedding.
pub fn metric_of(tris: &[[usize; 3]], pos: &[Vec3]) -> Vec<RefTriangle> {
    tris.iter().map(|t| RefTriangle::from_points(pos[t[0]], pos[t[1]], pos[t[2]])).collect()
}

/// Cotangent edge weights `(i < j, w)` of a per-triangle metric, summed over
/// the two triangles sharing each edge.
pub(crate) fn metric_weights(tris: &[[usize; 3]], metric: &[RefTriangle]) -> Vec<((usize, usize), f64)> {
    let mut w: Vec<((usize, usize), f64)> = Vec::with_capacity(tris.len() * 3);
    for (t, m) in tris.iter().zip(metric) {
        for (k, cot) in m.cotans().into_iter().enumerate() {
            let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
            w.push(((a.min(b), a.max(b)), 0.5 * cot));
        }
    }
    w.sort_by(|x, y| x.0.cmp(&y.0));
    let mut out: Vec<((usize, usize), f64)> = Vec::with_capacity(w.len() / 2 + 1);
    for (k, v) in w {
        match out.last_mut() {
            Some((lk, lv)) if *lk == k => *lv += v,
            _ => out.push((k, v)),
        }
    }
    out
}

/// A disc map attached to the wire along the lower arc.
///
/// `metric` is the reference conformal structure: one shape per triangle,
/// whose cotangent weights define the Dirichlet energy.
/// Lower-arc vertex `k` (sector `S/2 + k`) sits at `Γ(attach[k])`, so
/// `attach[0]` is the start of the attached segment and the last entry its end.
#[derive(Debug, Clone)]
pub struct CrescentMesh {
    mesh: Arc<DiscMesh>,
    wire: Arc<WireCurve>,
    positions: Vec<Vec3>,
    metric: Vec<RefTriangle>,
    attach: Vec<f64>,
}

impl CrescentMesh {
    /// Crescent whose reference metric is the embedding `domain`.
    pub fn new(
        mesh: Arc<DiscMesh>,
        wire: Arc<WireCurve>,
        positions: Vec<Vec3>,
        domain: Vec<Vec3>,
        attach: Vec<f64>,
    ) -> Result<Self> {
        let n = mesh.vertex_count();
        if domain.len() != n {
            return Err(SolveError::Invalid(format!("expected {n} domain positions, got {}", domain.len())));
        }
        let metric = metric_of(mesh.triangles(), &domain);
        Self::with_metric(mesh, wire, positions, metric, attach)
    }

    pub fn with_metric(
        mesh: Arc<DiscMesh>,
        wire: Arc<WireCurve>,
        positions: Vec<Vec3>,
        metric: Vec<RefTriangle>,
        attach: Vec<f64>,
    ) -> Result<Self> {
        let n = mesh.vertex_count();
        if positions.len() != n {
            return Err(SolveError::Invalid(format!("expected {n} positions, got {}", positions.len())));
        }
        if metric.len() != mesh.triangles().len() {
            return Err(SolveError::Invalid(format!("expected {} reference triangles", mesh.triangles().len())));
        }
        if let Some(t) = metric.iter().position(|m| !m.is_valid()) {
            return Err(SolveError::Degenerate { triangle: t });
        }
        if attach.len() != mesh.sectors() / 2 + 1 {
            return Err(SolveError::Invalid(format!("expected {} attachment parameters", mesh.sectors() / 2 + 1)));
        }
        if positions.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(SolveError::Invalid("non-finite position".into()));
        }
        if attach.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(SolveError::Invalid("attachment parameters not monotone".into()));
        }
        let c = CrescentMesh { mesh, wire, positions, metric, attach };
        let scale = c.wire.length();
        for k in 0..c.attach.len() {
            let gap = (c.positions[c.lower_vertex(k)] - c.wire.point(c.attach[k])).norm();
            if gap > 1e-9 * scale {
                return Err(SolveError::Invalid(format!("lower vertex {k} is {gap:.3e} off the wire")));
            }
        }
        Ok(c)
    }

    pub fn mesh(&self) -> &Arc<DiscMesh> {
        &self.mesh
    }

    pub fn wire(&self) -> &Arc<WireCurve> {
        &self.wire
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn metric(&self) -> &[RefTriangle] {
        &self.metric
    }

    pub fn attachment(&self) -> &[f64] {
        &self.attach
    }

    /// Vertex index of lower-arc vertex `k`.
    pub fn lower_vertex(&self, k: usize) -> usize {
        let s = self.mesh.sectors();
        self.mesh.vertex(self.mesh.rings(), s / 2 + k)
    }

    /// Thread polyline vertices, from the corner at the segment end
    /// (sector 0) through the upper arc to the corner at its start.
    pub fn thread_vertices(&self) -> Vec<usize> {
        let (r, s) = (self.mesh.rings(), self.mesh.sectors());
        (0..=s / 2).map(|j| self.mesh.vertex(r, j)).collect()
    }

    pub fn thread_polyline(&self) -> Vec<Vec3> {
        self.thread_vertices().iter().map(|&v| self.positions[v]).collect()
    }

    pub fn thread_length(&self) -> f64 {
        self.thread_polyline().windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// `|Im φ₋|`, the arclength of the attached wire segment.
    pub fn wire_segment(&self) -> (f64, f64) {
        (self.attach[0], *self.attach.last().unwrap())
    }

    /// `ℓ(M)`: wire length with the attached segment replaced by the thread.
    pub fn boundary_length(&self) -> f64 {
        let (a, b) = self.wire_segment();
        self.wire.length() - (b - a) + self.thread_length()
    }

    /// Dirichlet energy of the positions with respect to the metric.
    pub fn energy(&self) -> f64 {
        self.triangle_terms().iter().map(|t| t.energy).sum()
    }

    pub fn area(&self) -> f64 {
        self.triangle_terms().iter().map(|t| t.area).sum()
    }

    fn triangle_terms(&self) -> Vec<TriangleTerms> {
        self.mesh.triangles().iter().zip(&self.metric).map(|(t, m)| triangle_terms(t, m, &self.positions)).collect()
    }

    /// Area-weighted mean of `1 - (J/e)^2` with `J = |X_x × X_y|` and
    /// `e = (|X_x|^2 + |X_y|^2)/2` in domain coordinates; zero exactly when
    /// the map is conformal.
    pub fn conformality_residual(&self) -> f64 {
        let terms = self.triangle_terms();
        let total: f64 = terms.iter().map(|t| t.domain_area).sum();
        terms
            .iter()
            .filter(|t| t.energy > 0.0)
            .map(|t| t.domain_area * (1.0 - (t.area / t.energy).powi(2)))
            .sum::<f64>()
            / total
    }

    /// Replaces the interior positions by the discrete harmonic extension of
    /// the boundary with respect to the metric.
    pub fn harmonic_replace(&mut self) -> Result<()> {
        let weights = metric_weights(self.mesh.triangles(), &self.metric);
        let (k, coupling) = assemble_interior(&self.mesh, &weights)?;
        let chol = k.cholesky().map_err(|e| SolveError::Invalid(e.to_string()))?;
        let interior = self.mesh.interior();
        for c in 0..3 {
            let mut rhs = vec![0.0; interior.len()];
            for &(row, v, w) in &coupling {
                rhs[row] += w * self.positions[v][c];
            }
            chol.solve_in_place(&mut rhs);
            for (row, &v) in interior.iter().enumerate() {
                self.positions[v][c] = rhs[row];
            }
        }
        Ok(())
    }

    /// Copy with the metric reset to the current positions.
    pub fn rebased(&self) -> Result<Self> {
        let metric = metric_of(self.mesh.triangles(), &self.positions);
        Self::with_metric(self.mesh.clone(), self.wire.clone(), self.positions.clone(), metric, self.attach.clone())
    }

    /// Copy with every position replaced; `attach` must stay consistent.
    pub fn with_positions(&self, positions: Vec<Vec3>, attach: Vec<f64>) -> Result<Self> {
        Self::with_metric(self.mesh.clone(), self.wire.clone(), positions, self.metric.clone(), attach)
    }

    /// First triangle whose orientation or area collapses relative to the metric.
    pub fn first_flipped(&self) -> Option<usize> {
        first_flipped(self.mesh.triangles(), &self.metric, &self.positions)
    }

    /// Plain-text dump: `v x y z` per vertex, `f i j k` per triangle
    /// (0-based), then `b i lower t` / `b i upper` boundary roles.
    pub fn ascii_dump(&self) -> String {
        let mut out = String::new();
        for p in &self.positions {
            let _ = writeln!(out, "v {:.12e} {:.12e} {:.12e}", p.x, p.y, p.z);
        }
        for t in self.mesh.triangles() {
            let _ = writeln!(out, "f {} {} {}", t[0], t[1], t[2]);
        }
        for (k, t) in self.attach.iter().enumerate() {
            let _ = writeln!(out, "b {} lower {:.12e}", self.lower_vertex(k), t);
        }
        for v in self.mesh.upper_arc() {
            let _ = writeln!(out, "b {v} upper");
        }
        out
    }
}

pub(crate) fn first_flipped(tris: &[[usize; 3]], metric: &[RefTriangle], pos: &[Vec3]) -> Option<usize> {
    tris.iter().zip(metric).position(|(t, m)| {
        let n = (pos[t[1]] - pos[t[0]]).cross(&(pos[t[2]] - pos[t[0]]));
        !(m.normal.dot(&n) > 0.0)
    })
}

#[derive(Debug, Clone, Copy)]
struct TriangleTerms {
    domain_area: f64,
    area: f64,
    energy: f64,
}

fn triangle_terms(t: &[usize; 3], m: &RefTriangle, pos: &[Vec3]) -> TriangleTerms {
    let domain_area = m.area();
    let (dx1, dx2) = (pos[t[1]] - pos[t[0]], pos[t[2]] - pos[t[0]]);
    // [dx1 dx2] = [X_x X_y] [[q1x q2x], [0 q2y]]
    let xx = dx1 / m.q1x;
    let xy = (dx2 - xx * m.q2x) / m.q2y;
    let e = 0.5 * (xx.norm_squared() + xy.norm_squared());
    let j = xx.cross(&xy).norm();
    TriangleTerms { domain_area, area: domain_area * j, energy: domain_area * e }
}

/// Energies, lengths and residuals of a crescent, plus the verification
/// results filled in by [`verify_all`](super::verify_all).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub energy: f64,
    pub area: f64,
    pub thread_length: f64,
    pub wire_segment: f64,
    pub boundary_length: f64,
    pub conformality: f64,
    /// Median discrete thread curvature.
    pub kappa: f64,
    /// Interquartile range of the thread curvature over its median.
    pub kappa_spread: f64,
    /// Curvature from the length multiplier, `1/μ`.
    pub kappa_multiplier: Option<f64>,
    pub r_max: Option<f64>,
    pub hull_margin: Option<f64>,
    pub hull_ok: Option<bool>,
    pub kappa_ok: Option<bool>,
    pub slicewise_ok: Option<bool>,
    pub near_wire_ok: Option<bool>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn evaluate(c: &CrescentMesh) -> Result<SolveReport> {
    if let Some(t) = c.mesh.triangles().iter().position(|t| {
        let p = &c.positions;
        (p[t[1]] - p[t[0]]).cross(&(p[t[2]] - p[t[0]])).norm() == 0.0
    }) {
        return Err(SolveError::Degenerate { triangle: t });
    }
    let terms = c.triangle_terms();
    let (a, b) = c.wire_segment();
    let kappa = super::verify::extract_kappa(c).ok();
    Ok(SolveReport {
        energy: terms.iter().map(|t| t.energy).sum(),
        area: terms.iter().map(|t| t.area).sum(),
        thread_length: c.thread_length(),
        wire_segment: b - a,
        boundary_length: c.boundary_length(),
        conformality: c.conformality_residual(),
        kappa: kappa.as_ref().map_or(f64::NAN, |k| k.kappa),
        kappa_spread: kappa.as_ref().map_or(f64::NAN, |k| k.spread),
        ..SolveReport::default()
    })
}
