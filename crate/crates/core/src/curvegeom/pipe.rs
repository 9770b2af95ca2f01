use super::wire::WireCurve;
use super::CurveError;
use crate::hull::segment_distance;
use crate::Vec3;

/// Inscribed polyline with vertices `Γ(kε)` and `Γ(ℓ)`.
#[derive(Debug, Clone)]
pub struct PolylineApprox {
    pub params: Vec<f64>,
    pub vertices: Vec<Vec3>,
    pub eps: f64,
}

impl PolylineApprox {
    /// Euclidean distance from `p` to the polyline; its `r`-level set is the
    /// jointed pipe surface of radius `r`.
    pub fn distance(&self, p: &Vec3) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| segment_distance(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `p` lies inside the radius-`r` jointed pipe.
    pub fn pipe_contains(&self, p: &Vec3, r: f64) -> bool {
        self.distance(p) < r
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// Builds the inscribed polyline at step `eps` and measures the Hausdorff
/// distance between wire and polyline.
pub fn polyline_and_pipe(wire: &WireCurve, eps: f64) -> Result<(PolylineApprox, f64), CurveError> {
    let len = wire.length();
    let (_, kmax) = wire.curvature_max();
    if !(eps > 0.0) || eps >= len || kmax * eps >= 2.0 {
        return Err(CurveError::SegmentTooLong { eps, length: len, simple: if kmax > 0.0 { 1.0 / kmax } else { f64::INFINITY } });
    }
    let mut params: Vec<f64> = (0..).map(|k| k as f64 * eps).take_while(|s| *s < len - 1e-12 * len).collect();
    params.push(len);
    let vertices: Vec<Vec3> = params.iter().map(|&s| wire.point(s)).collect();
    let poly = PolylineApprox { params, vertices, eps };

    let m = poly.vertices.len() - 1;
    let near = |k: usize, p: &Vec3| {
        let lo = k.saturating_sub(1);
        let hi = (k + 1).min(m - 1);
        let mut d = f64::INFINITY;
        for j in lo..=hi {
            d = d.min(segment_distance(p, &poly.vertices[j], &poly.vertices[j + 1]));
        }
        if wire.is_closed() && (k == 0 || k == m - 1) {
            let j = if k == 0 { m - 1 } else { 0 };
            d = d.min(segment_distance(p, &poly.vertices[j], &poly.vertices[j + 1]));
        }
        d
    };
    let dense = 32;
    let mut deviation: f64 = 0.0;
    for k in 0..m {
        let (a, b) = (poly.params[k], poly.params[k + 1]);
        let dist = |s: f64| near(k, &wire.point(s));
        let h = (b - a) / dense as f64;
        let best = (0..=dense).max_by(|&i, &j| dist(a + i as f64 * h).partial_cmp(&dist(a + j as f64 * h)).unwrap()).unwrap();
        let lo = (a + (best as f64 - 1.0) * h).max(a);
        let hi = (a + (best as f64 + 1.0) * h).min(b);
        deviation = deviation.max(golden_max(dist, lo, hi)).max(dist(a + best as f64 * h));
    }
    Ok((poly, deviation))
}
