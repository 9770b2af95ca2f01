//! Convex hulls of point sets in 3-space, including the flat and collinear
//! degenerate cases.

use std::collections::HashSet;

use crate::Vec3;

/// Convex hull of a finite point set.
#[derive(Debug, Clone)]
pub enum Hull {
    Empty,
    Point(Vec3),
    Segment(Vec3, Vec3),
    /// Flat hull: counter-clockwise polygon in the plane through `origin`
    /// spanned by `u`, `v`, with unit `normal = u × v`.
    Planar { origin: Vec3, u: Vec3, v: Vec3, normal: Vec3, polygon: Vec<[f64; 2]> },
    /// Solid hull with outward-oriented triangular faces.
    Solid { points: Vec<Vec3>, faces: Vec<[usize; 3]> },
}

fn scale_of(points: &[Vec3]) -> f64 {
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm().max(f64::MIN_POSITIVE)
}

/// 2-D convex hull by Andrew's monotone chain, counter-clockwise, without
/// collinear points.
pub fn hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = out.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while out.len() >= start + 2 && cross(&out[out.len() - 2], &out[out.len() - 1], p) <= 0.0 {
                out.pop();
            }
            out.push(*p);
        }
        out.pop();
    }
    out
}

impl Hull {
    pub fn new(points: &[Vec3]) -> Hull {
        if points.is_empty() {
            return Hull::Empty;
        }
        let scale = scale_of(points);
        let eps = 1e-10 * scale;
        let a = points[0];
        let Some(b) = points.iter().copied().max_by(|p, q| (p - a).norm().partial_cmp(&(q - a).norm()).unwrap()) else {
            return Hull::Point(a);
        };
        if (b - a).norm() <= eps {
            return Hull::Point(a);
        }
        // extreme pair along the direction a -> b
        let dir = (b - a).normalize();
        let (mut lo, mut hi) = (a, a);
        for p in points {
            if (p - a).dot(&dir) < (lo - a).dot(&dir) {
                lo = *p;
            }
            if (p - a).dot(&dir) > (hi - a).dot(&dir) {
                hi = *p;
            }
        }
        let axis = (hi - lo).normalize();
        let off_line = |p: &Vec3| {
            let d = p - lo;
            (d - axis * d.dot(&axis)).norm()
        };
        let c = points.iter().copied().max_by(|p, q| off_line(p).partial_cmp(&off_line(q)).unwrap()).unwrap();
        if off_line(&c) <= eps {
            return Hull::Segment(lo, hi);
        }
        let normal = (hi - lo).cross(&(c - lo)).normalize();
        let plane = |p: &Vec3| (p - lo).dot(&normal);
        let d = points.iter().copied().max_by(|p, q| plane(p).abs().partial_cmp(&plane(q).abs()).unwrap()).unwrap();
        if plane(&d).abs() <= eps {
            let u = axis;
            let v = normal.cross(&u);
            let proj: Vec<[f64; 2]> = points.iter().map(|p| [(p - lo).dot(&u), (p - lo).dot(&v)]).collect();
            return Hull::Planar { origin: lo, u, v, normal, polygon: hull_2d(&proj) };
        }
        solid_hull(points, [lo, hi, c, d], eps)
    }

    /// Signed distance of `p` to the hull boundary: negative inside, the
    /// largest facet-plane excess for solid hulls, Euclidean outside
    /// distance for degenerate ones.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        match self {
            Hull::Empty => f64::INFINITY,
            Hull::Point(q) => (p - q).norm(),
            Hull::Segment(a, b) => segment_distance(p, a, b),
            Hull::Planar { origin, u, v, normal, polygon } => {
                let d = p - origin;
                let dn = d.dot(normal).abs();
                let q = [d.dot(u), d.dot(v)];
                let dp = polygon_signed_distance(polygon, q);
                if dp <= 0.0 {
                    if dn > 0.0 { dn } else { dp }
                } else {
                    dp.hypot(dn)
                }
            }
            Hull::Solid { points, faces } => faces
                .iter()
                .map(|f| {
                    let (a, b, c) = (points[f[0]], points[f[1]], points[f[2]]);
                    let n = (b - a).cross(&(c - a)).normalize();
                    (p - a).dot(&n)
                })
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Boundary triangles of the hull (fan-triangulated for flat hulls).
    pub fn triangles(&self) -> Vec<[Vec3; 3]> {
        match self {
            Hull::Planar { origin, u, v, polygon, .. } if polygon.len() >= 3 => {
                let lift = |q: &[f64; 2]| origin + u * q[0] + v * q[1];
                (1..polygon.len() - 1).map(|i| [lift(&polygon[0]), lift(&polygon[i]), lift(&polygon[i + 1])]).collect()
            }
            Hull::Solid { points, faces } => faces.iter().map(|f| [points[f[0]], points[f[1]], points[f[2]]]).collect(),
            _ => Vec::new(),
        }
    }

    /// Extreme points of the hull.
    pub fn vertices(&self) -> Vec<Vec3> {
        match self {
            Hull::Empty => Vec::new(),
            Hull::Point(p) => vec![*p],
            Hull::Segment(a, b) => vec![*a, *b],
            Hull::Planar { origin, u, v, polygon, .. } => polygon.iter().map(|q| origin + u * q[0] + v * q[1]).collect(),
            Hull::Solid { points, faces } => {
                let mut used: Vec<usize> = faces.iter().flatten().copied().collect();
                used.sort_unstable();
                used.dedup();
                used.into_iter().map(|i| points[i]).collect()
            }
        }
    }
}

pub fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

fn polygon_signed_distance(poly: &[[f64; 2]], q: [f64; 2]) -> f64 {
    match poly.len() {
        0 => f64::INFINITY,
        1 => (q[0] - poly[0][0]).hypot(q[1] - poly[0][1]),
        2 => {
            let a = Vec3::new(poly[0][0], poly[0][1], 0.0);
            let b = Vec3::new(poly[1][0], poly[1][1], 0.0);
            segment_distance(&Vec3::new(q[0], q[1], 0.0), &a, &b)
        }
        n => {
            let mut inside_excess = f64::NEG_INFINITY;
            let mut outside = f64::INFINITY;
            let mut is_out = false;
            for i in 0..n {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
                let len = ex.hypot(ey);
                // outward normal of a ccw polygon is (ey, -ex)
                let s = ((q[0] - a[0]) * ey - (q[1] - a[1]) * ex) / len;
                inside_excess = inside_excess.max(s);
                if s > 0.0 {
                    is_out = true;
                }
                let a3 = Vec3::new(a[0], a[1], 0.0);
                let b3 = Vec3::new(b[0], b[1], 0.0);
                outside = outside.min(segment_distance(&Vec3::new(q[0], q[1], 0.0), &a3, &b3));
            }
            if is_out { outside } else { inside_excess }
        }
    }
}

fn solid_hull(points: &[Vec3], seed: [Vec3; 4], eps: f64) -> Hull {
    let mut pts: Vec<Vec3> = seed.to_vec();
    pts.extend(points.iter().copied());
    let plane = |pts: &[Vec3], f: &[usize; 3], p: &Vec3| {
        let (a, b, c) = (pts[f[0]], pts[f[1]], pts[f[2]]);
        let n = (b - a).cross(&(c - a));
        (p - a).dot(&n) / n.norm()
    };
    let mut faces: Vec<[usize; 3]> = vec![[0, 1, 2], [0, 3, 1], [1, 3, 2], [2, 3, 0]];
    let centroid = (seed[0] + seed[1] + seed[2] + seed[3]) / 4.0;
    for f in &mut faces {
        if plane(&pts, f, &centroid) > 0.0 {
            f.swap(1, 2);
        }
    }
    for i in 4..pts.len() {
        let p = pts[i];
        let visible: Vec<bool> = faces.iter().map(|f| plane(&pts, f, &p) > eps).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, v)| **v) {
            for k in 0..3 {
                edges.insert((f[k], f[(k + 1) % 3]));
            }
        }
        let mut next: Vec<[usize; 3]> = Vec::with_capacity(faces.len() + 8);
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for (f, vis) in faces.iter().zip(&visible) {
            if !vis {
                next.push(*f);
                continue;
            }
            for k in 0..3 {
                let e = (f[k], f[(k + 1) % 3]);
                if !edges.contains(&(e.1, e.0)) {
                    horizon.push(e);
                }
            }
        }
        for (a, b) in horizon {
            next.push([a, b, i]);
        }
        faces = next;
    }
    Hull::Solid { points: pts, faces }
}
