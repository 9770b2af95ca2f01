use std::sync::Arc;

use super::{CrescentMesh, Result, SolveError};
use crate::curvegeom::WireCurve;
use crate::harmlevel::DiscMesh;
use crate::Vec3;

/// How the half-width `w` of the competitor lens is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WidthRule {
    /// `w = (2κ²/3)^(-1/3) λ^(1/3)`.
    Formula,
    /// Smallest `w` whose chord deficit `2w - |Γ(s0+w) - Γ(s0-w)|` equals `λ`.
    Admissible,
    Fixed(f64),
}

/// Arclength saved by replacing `Γ([s0-w, s0+w])` with its chord.
pub fn chord_deficit(wire: &WireCurve, s0: f64, w: f64) -> f64 {
    2.0 * w - (wire.point(s0 + w) - wire.point(s0 - w)).norm()
}

fn fits(wire: &WireCurve, s0: f64, w: f64) -> bool {
    if wire.is_closed() {
        2.0 * w < wire.length()
    } else {
        s0 - w >= 0.0 && s0 + w <= wire.length()
    }
}

fn half_width(wire: &WireCurve, s0: f64, kappa: f64, lambda: f64, rule: WidthRule) -> Result<f64> {
    let formula = (2.0 * kappa * kappa / 3.0).powf(-1.0 / 3.0) * lambda.cbrt();
    let w = match rule {
        WidthRule::Fixed(w) => w,
        WidthRule::Formula => formula,
        WidthRule::Admissible => {
            let mut hi = formula.max(1e-12);
            while chord_deficit(wire, s0, hi) < lambda {
                hi *= 1.5;
                if !fits(wire, s0, hi) {
                    return Err(SolveError::BadWidth(hi));
                }
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if chord_deficit(wire, s0, mid) < lambda {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        }
    };
    if !(w > 0.0) || !fits(wire, s0, w) {
        return Err(SolveError::BadWidth(w));
    }
    Ok(w)
}

/// Lens competitor centred at the curvature maximum `s0`: the disc's lower
/// half is stretched along `Γ([s0-w, s0+w])`, its upper half onto the chord,
/// and each vertical line `ξ = const` onto the segment joining `Γ(s0 + wξ)`
/// to the matching chord point. Quad diagonals are chosen to be Delaunay in
/// the image, and the domain metric is the image itself, so `D = A`.
pub fn build_competitor_p0(
    wire: Arc<WireCurve>,
    lambda: f64,
    rule: WidthRule,
    rings: usize,
    sectors: usize,
) -> Result<CrescentMesh> {
    let (s0, kappa) = wire.curvature_max();
    if !(kappa > 1e-9) {
        return Err(SolveError::StraightWire(kappa.max(0.0)));
    }
    if !matches!(rule, WidthRule::Fixed(_)) && !(lambda > 0.0) {
        return Err(SolveError::BadDeficit { lambda, length: wire.length(), gap: 0.0 });
    }
    let w = half_width(&wire, s0, kappa, lambda, rule)?;
    let base = DiscMesh::new(rings, sectors)?;
    let (a, b) = (wire.point(s0 - w), wire.point(s0 + w));
    let chord = |xi: f64| a + (b - a) * (0.5 * (xi + 1.0));
    let positions: Vec<Vec3> = (0..base.vertex_count())
        .map(|v| {
            let [xi, eta] = base.uv()[v];
            match base.arc(v) {
                Some(crate::harmlevel::BoundaryArc::Lower) => wire.point(s0 + w * xi),
                Some(crate::harmlevel::BoundaryArc::Upper) => chord(xi),
                None => {
                    let c = (1.0 - xi * xi).sqrt();
                    let t = (eta + c) / (2.0 * c);
                    wire.point(s0 + w * xi) * (1.0 - t) + chord(xi) * t
                }
            }
        })
        .collect();
    let angle = |p: Vec3, q: Vec3, o: Vec3| {
        let (u, v) = (p - o, q - o);
        u.cross(&v).norm().atan2(u.dot(&v))
    };
    let mesh = DiscMesh::with_diagonals(rings, sectors, |i, j| {
        let pa = positions[base.vertex(i, j)];
        let pb = positions[base.vertex(i + 1, j)];
        let pc = positions[base.vertex(i + 1, j + 1)];
        let pd = positions[base.vertex(i, j + 1)];
        angle(pa, pc, pb) + angle(pa, pc, pd) > std::f64::consts::PI + 1e-12
    })?;
    let attach: Vec<f64> = (0..=sectors / 2)
        .map(|k| s0 + w * mesh.uv()[mesh.vertex(rings, sectors / 2 + k)][0])
        .collect();
    CrescentMesh::new(Arc::new(mesh), wire, positions.clone(), positions, attach)
}

#[cfg(test)]
mod tests {
    use super::super::evaluate;
    use super::*;
    use crate::curvegeom::CurveFamily;

    fn ellipse() -> Arc<WireCurve> {
        Arc::new(WireCurve::from_parametric(&CurveFamily::ellipse(2.0, 1.0), 4001).unwrap())
    }

    #[test]
    fn straight_wire_has_no_competitor() {
        let seg = Arc::new(WireCurve::from_parametric(&CurveFamily::Segment { length: 2.0 }, 401).unwrap());
        assert!(matches!(build_competitor_p0(seg, 0.01, WidthRule::Formula, 4, 16), Err(SolveError::StraightWire(_))));
    }

    #[test]
    fn formula_width_on_unit_circle() {
        let wire = Arc::new(WireCurve::from_parametric(&CurveFamily::circle(1.0), 4001).unwrap());
        let c = build_competitor_p0(wire, 0.01, WidthRule::Formula, 16, 32).unwrap();
        let (a, b) = c.wire_segment();
        let w = (b - a) / 2.0;
        assert!((w - (1.5f64).cbrt() * 0.01f64.cbrt()).abs() < 1e-12);
        // lens between a unit arc of half-angle w and its chord
        let exact = w - w.sin() * w.cos();
        let r = evaluate(&c).unwrap();
        assert!((r.area - exact).abs() < 0.01 * exact, "{} vs {}", r.area, exact);
        assert!((r.energy - 0.01).abs() < 0.1 * 0.01);
    }

    #[test]
    fn admissible_width_matches_deficit() {
        let wire = ellipse();
        let c = build_competitor_p0(wire.clone(), 0.01, WidthRule::Admissible, 8, 32).unwrap();
        let r = evaluate(&c).unwrap();
        assert!((wire.length() - r.boundary_length - 0.01).abs() < 1e-12);
        assert!(r.energy >= r.area - 1e-15);
        assert!(c.first_flipped().is_none());
    }

    #[test]
    fn diagonals_are_delaunay_in_the_image() {
        let c = build_competitor_p0(ellipse(), 0.02, WidthRule::Formula, 12, 48).unwrap();
        let (pos, mesh) = (c.positions(), c.mesh());
        let s = mesh.sectors();
        let angle = |o: Vec3, p: Vec3, q: Vec3| {
            let (u, v) = (p - o, q - o);
            u.cross(&v).norm().atan2(u.dot(&v))
        };
        let mut flips = 0;
        for i in 1..mesh.rings() {
            for j in 0..s {
                let [a, b, c, d] = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].map(|(r, k)| mesh.vertex(r, k));
                let first = mesh.triangles()[s + 2 * ((i - 1) * s + j)];
                let (e0, e1, o0, o1) = if first[2] == c { (a, c, b, d) } else { (b, d, a, c) };
                flips += usize::from(first[2] != c);
                let opp = angle(pos[o0], pos[e0], pos[e1]) + angle(pos[o1], pos[e0], pos[e1]);
                assert!(opp <= std::f64::consts::PI + 1e-9, "quad ({i},{j}): {opp}");
            }
        }
        assert!(flips > 0);
    }
}
