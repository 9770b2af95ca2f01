use std::sync::Arc;

use super::frame::{default_seed, parallel_frame, ParallelFrame};
use super::wire::WireCurve;
use super::CurveError;
use crate::hull::Hull;
use crate::Vec3;

/// Image of `exp(s, x, y)` and the stretch factor of `d exp` along `∂s`.
#[derive(Debug, Clone, Copy)]
pub struct ExpPoint {
    pub point: Vec3,
    pub jacobian_factor: f64,
}

/// Tube coordinates `(s, x, y)` of a point near the wire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiPoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

/// Normal-disc coordinates on the radius-`R` neighborhood of a wire.
#[derive(Debug, Clone)]
pub struct TubularChart {
    wire: Arc<WireCurve>,
    frame: ParallelFrame,
    radius: f64,
    simple_radius: f64,
}

impl TubularChart {
    /// Chart with a default frame seed and radius `fraction * R0`.
    pub fn new(wire: Arc<WireCurve>, fraction: f64) -> Result<Self, CurveError> {
        let frame = parallel_frame(&wire, default_seed(&wire))?;
        let r0 = simple_radius(&wire);
        Self::with_frame(wire, frame, fraction * r0, r0)
    }

    pub fn with_frame(wire: Arc<WireCurve>, frame: ParallelFrame, radius: f64, simple_radius: f64) -> Result<Self, CurveError> {
        if !(radius > 0.0 && radius < simple_radius) {
            return Err(CurveError::BadRadius { radius, simple: simple_radius });
        }
        Ok(TubularChart { wire, frame, radius, simple_radius })
    }

    pub fn wire(&self) -> &Arc<WireCurve> {
        &self.wire
    }

    pub fn frame(&self) -> &ParallelFrame {
        &self.frame
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn simple_radius(&self) -> f64 {
        self.simple_radius
    }

    /// `Γ(s) + x E1(s) + y E2(s)` with jacobian factor `1 - <x E1 + y E2, Γ''(s)>`.
    pub fn exp_map(&self, s: f64, x: f64, y: f64) -> Result<ExpPoint, CurveError> {
        let r = x.hypot(y);
        if r >= self.radius {
            return Err(CurveError::OutsideChart { r, radius: self.radius });
        }
        let (e1, e2) = self.frame.at(&self.wire, s);
        let j = self.wire.eval(s);
        let v = e1 * x + e2 * y;
        Ok(ExpPoint { point: j.pos + v, jacobian_factor: 1.0 - v.dot(&j.d2) })
    }

    /// Inverse of `exp`: the arclength of the normal disc through `p` and the
    /// offset within it.
    pub fn project_psi(&self, p: &Vec3) -> Result<PsiPoint, CurveError> {
        self.project_near(p, None)
    }

    /// As [`project_psi`](Self::project_psi), starting the search at `hint`.
    pub fn project_near(&self, p: &Vec3, hint: Option<f64>) -> Result<PsiPoint, CurveError> {
        let wire = &*self.wire;
        let mut s = match hint {
            Some(h) => h,
            None => {
                let k = nearest_sample(wire, p);
                wire.samples()[k].s
            }
        };
        let len = wire.length();
        for _ in 0..50 {
            let j = wire.eval(s);
            let d = p - j.pos;
            let f = d.dot(&j.d1);
            let df = -1.0 + d.dot(&j.d2);
            if df >= -1e-3 {
                break; // past the focal distance
            }
            let step = f / df;
            s -= step;
            if !wire.is_closed() {
                s = s.clamp(0.0, len);
            }
            if step.abs() < 1e-14 * (1.0 + len) {
                break;
            }
        }
        let s = wire.wrap(s);
        let j = wire.eval(s);
        let d = p - j.pos;
        let (e1, e2) = self.frame.at(wire, s);
        let (x, y) = (d.dot(&e1), d.dot(&e2));
        let r = x.hypot(y);
        let along = d.dot(&j.d1).abs();
        if r >= self.radius || along > 1e-9 * (1.0 + r) {
            return Err(CurveError::OutsideChart { r: d.norm(), radius: self.radius });
        }
        Ok(PsiPoint { s, x, y, r })
    }
}

fn nearest_sample(wire: &WireCurve, p: &Vec3) -> usize {
    wire.samples()[..wire.sample_count()]
        .iter()
        .enumerate()
        .map(|(k, smp)| (k, (smp.pos - p).norm_squared()))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .map(|(k, _)| k)
        .unwrap_or(0)
}

/// Whether two radius-`r` discs with centers `c` and unit normals `n` meet.
fn discs_intersect(c1: &Vec3, n1: &Vec3, c2: &Vec3, n2: &Vec3, r: f64) -> bool {
    let dir = n1.cross(n2);
    let dn = dir.norm();
    if dn < 1e-12 {
        // parallel planes: coplanar discs overlap when centers are close
        return (c2 - c1).dot(n1).abs() < 1e-12 && (c2 - c1).norm() < 2.0 * r;
    }
    let dir = dir / dn;
    // a point on both planes
    let (h1, h2) = (n1.dot(c1), n2.dot(c2));
    let k = n1.dot(n2);
    let det = 1.0 - k * k;
    let a = (h1 - k * h2) / det;
    let b = (h2 - k * h1) / det;
    let p0 = n1 * a + n2 * b;
    let chord = |c: &Vec3| -> Option<(f64, f64)> {
        let t0 = (c - p0).dot(&dir);
        let foot = p0 + dir * t0;
        let d2 = (foot - c).norm_squared();
        if d2 >= r * r {
            return None;
        }
        let half = (r * r - d2).sqrt();
        Some((t0 - half, t0 + half))
    };
    match (chord(c1), chord(c2)) {
        (Some(i1), Some(i2)) => i1.0.max(i2.0) < i1.1.min(i2.1),
        _ => false,
    }
}

/// Largest radius at which no two normal discs whose centers are at least
/// `2r` apart in arclength intersect, capped by `1/κ_max`.
pub fn simple_radius(wire: &WireCurve) -> f64 {
    let (_, kmax) = wire.curvature_max();
    let cap = if kmax > 1e-12 { 1.0 / kmax } else { f64::INFINITY };
    let stride = (wire.sample_count() / 600).max(1);
    let grid: Vec<(f64, Vec3, Vec3)> = (0..wire.sample_count())
        .step_by(stride)
        .chain(if wire.is_closed() { None } else { Some(wire.samples().len() - 1) })
        .map(|k| {
            let smp = &wire.samples()[k];
            (smp.s, smp.pos, smp.d[0])
        })
        .collect();
    let len = wire.length();
    let clash = |r: f64| {
        grid.iter().enumerate().any(|(i, a)| {
            grid[i + 1..].iter().any(|b| {
                let mut ds = b.0 - a.0;
                if wire.is_closed() {
                    ds = ds.min(len - ds);
                }
                ds >= 2.0 * r && (b.1 - a.1).norm() < 2.0 * r && discs_intersect(&a.1, &a.2, &b.1, &b.2, r)
            })
        })
    };
    let mut hi = cap.min(len);
    if !clash(hi) {
        return hi;
    }
    let mut lo = 0.0;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if clash(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Smallest tube radius containing the convex hull of `points`, measured
/// over hull vertices and a grid on each hull face with spacing about
/// `resolution`.
pub fn hull_margin(chart: &TubularChart, points: &[Vec3], resolution: f64) -> Result<f64, CurveError> {
    let hull = Hull::new(points);
    let mut probe: Vec<Vec3> = hull.vertices();
    if let Hull::Segment(a, b) = hull {
        let n = ((b - a).norm() / resolution).ceil().max(1.0) as usize;
        probe.extend((0..=n).map(|i| a + (b - a) * (i as f64 / n as f64)));
    }
    for [a, b, c] in hull.triangles() {
        let longest = (b - a).norm().max((c - b).norm()).max((a - c).norm());
        let n = (longest / resolution).ceil().max(1.0) as usize;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                probe.push(a + (b - a) * u + (c - a) * v);
            }
        }
    }
    let mut worst: f64 = 0.0;
    for p in &probe {
        worst = worst.max(chart.project_psi(p)?.r);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::super::family::CurveFamily;
    use super::*;

    fn circle_chart() -> TubularChart {
        let w = Arc::new(WireCurve::from_parametric(&CurveFamily::circle(1.0), 4001).unwrap());
        TubularChart::new(w, 0.9).unwrap()
    }

    #[test]
    fn circle_simple_radius_is_one() {
        let c = circle_chart();
        assert!((c.simple_radius() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn jacobian_sign_on_circle() {
        let c = circle_chart();
        let s: f64 = 0.7;
        let inward = -Vec3::new(s.cos(), s.sin(), 0.0);
        let (e1, e2) = c.frame().at(c.wire(), s);
        let (x, y) = (0.1 * inward.dot(&e1), 0.1 * inward.dot(&e2));
        let toward = c.exp_map(s, x, y).unwrap();
        assert!((toward.jacobian_factor - 0.9).abs() < 1e-9);
        let away = c.exp_map(s, -x, -y).unwrap();
        assert!((away.jacobian_factor - 1.1).abs() < 1e-9);
    }

    #[test]
    fn psi_on_curve_and_displaced() {
        let c = circle_chart();
        let s0 = 2.3;
        let q = c.project_psi(&c.wire().point(s0)).unwrap();
        assert!((q.s - s0).abs() < 1e-10 && q.r < 1e-12);
        let (e1, _) = c.frame().at(c.wire(), s0);
        let q = c.project_psi(&(c.wire().point(s0) + e1 * 0.1)).unwrap();
        assert!((q.s - s0).abs() < 1e-10 && (q.r - 0.1).abs() < 1e-12);
    }

    #[test]
    fn outside_point_is_signalled() {
        let c = circle_chart();
        assert!(matches!(c.project_psi(&Vec3::new(3.0, 0.0, 0.0)), Err(CurveError::OutsideChart { .. })));
        assert!(c.exp_map(0.0, 0.95, 0.0).is_err());
    }

    #[test]
    fn disc_intersection_predicate() {
        let z = Vec3::z();
        assert!(discs_intersect(&Vec3::zeros(), &z, &Vec3::new(1.0, 0.0, 0.0), &z, 0.6));
        assert!(!discs_intersect(&Vec3::zeros(), &z, &Vec3::new(1.0, 0.0, 0.0), &z, 0.4));
        // perpendicular discs touching along a line
        assert!(discs_intersect(&Vec3::zeros(), &z, &Vec3::new(0.5, 0.0, 0.0), &Vec3::x(), 0.6));
        assert!(!discs_intersect(&Vec3::zeros(), &z, &Vec3::new(0.5, 0.0, 0.0), &Vec3::x(), 0.4));
    }

    #[test]
    fn margin_of_single_disc_loop() {
        let c = circle_chart();
        let s0 = 1.0;
        let (e1, e2) = c.frame().at(c.wire(), s0);
        let g = c.wire().point(s0);
        let pts: Vec<Vec3> = (0..40)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 40.0;
                g + (e1 * a.cos() + e2 * a.sin()) * 0.2
            })
            .collect();
        let m = hull_margin(&c, &pts, 0.01).unwrap();
        assert!((m - 0.2).abs() < 1e-9);
        assert!(hull_margin(&c, &[g + e1 * 0.05], 0.01).unwrap() - 0.05 < 1e-12);
    }
}
