use super::family::{arclength_jet, Parametric};
use super::CurveError;
use crate::Vec3;

/// Gauss-Legendre nodes and weights on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

/// Tolerance on `| |d1| - 1 |` for a curve to count as arclength-parametrized.
pub const UNIT_SPEED_TOL: f64 = 1e-6;

/// One arclength sample of a wire with derivatives `d[k] = Γ^(k+1)(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireSample {
    pub s: f64,
    pub pos: Vec3,
    pub d: [Vec3; 4],
}

/// Position and the first three arclength derivatives at an arbitrary `s`.
#[derive(Debug, Clone, Copy)]
pub struct WireJet {
    pub pos: Vec3,
    pub d1: Vec3,
    pub d2: Vec3,
    pub d3: Vec3,
}

/// An embedded wire curve sampled uniformly in arclength.
///
/// For closed curves the last sample sits at `s = length` and repeats the
/// first point.
#[derive(Debug, Clone)]
pub struct WireCurve {
    samples: Vec<WireSample>,
    length: f64,
    closed: bool,
    spacing: f64,
}

impl WireCurve {
    /// Samples a parametric curve at `n` points uniformly spaced in arclength.
    pub fn from_parametric<P: Parametric + ?Sized>(curve: &P, n: usize) -> Result<Self, CurveError> {
        if n < 5 {
            return Err(CurveError::TooFewSamples(n));
        }
        let (t0, t1) = curve.domain();
        let speed = |t: f64| curve.jet(t)[1].norm();

        // cumulative arclength on fine panels
        let panels = (4 * n).max(2000);
        let dt = (t1 - t0) / panels as f64;
        let panel_len = |a: f64, b: f64| {
            let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
            GL5.iter().map(|&(x, w)| w * speed(m + r * x)).sum::<f64>() * r
        };
        let mut cum = Vec::with_capacity(panels + 1);
        cum.push(0.0);
        for k in 0..panels {
            let a = t0 + k as f64 * dt;
            let prev = *cum.last().unwrap();
            cum.push(prev + panel_len(a, a + dt));
        }
        let length = cum[panels];
        if !(length > 0.0) {
            return Err(CurveError::Degenerate("zero length".into()));
        }

        let spacing = length / (n - 1) as f64;
        let mut samples = Vec::with_capacity(n);
        for k in 0..n {
            let target = if k == n - 1 { length } else { k as f64 * spacing };
            let idx = match cum.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
                Ok(i) => i.min(panels - 1),
                Err(i) => i.saturating_sub(1).min(panels - 1),
            };
            let a = t0 + idx as f64 * dt;
            let mut t = a + dt * ((target - cum[idx]) / (cum[idx + 1] - cum[idx]).max(f64::MIN_POSITIVE));
            for _ in 0..20 {
                let s_t = cum[idx] + panel_len(a, t);
                let step = (s_t - target) / speed(t);
                t -= step;
                if step.abs() < 1e-15 * (1.0 + t.abs()) {
                    break;
                }
            }
            let jet = curve.jet(t);
            let d = arclength_jet(&jet);
            samples.push(WireSample { s: target, pos: jet[0], d });
        }
        if curve.is_closed() {
            // exact periodic closure
            let first = samples[0];
            let last = samples.last_mut().unwrap();
            last.pos = first.pos;
            last.d = first.d;
        }
        let wire = WireCurve { samples, length, closed: curve.is_closed(), spacing };
        wire.validate()?;
        Ok(wire)
    }

    /// Builds a wire from points equally spaced in arclength. Derivatives
    /// come from five-point finite differences.
    pub fn from_points(points: &[Vec3], closed: bool) -> Result<Self, CurveError> {
        let mut pts: Vec<Vec3> = points.to_vec();
        if closed && pts.len() > 1 && (pts[0] - pts[pts.len() - 1]).norm() < 1e-12 {
            pts.pop();
        }
        let m = pts.len();
        if m < 5 {
            return Err(CurveError::TooFewSamples(m));
        }
        let segs = if closed { m } else { m - 1 };
        let chords: Vec<f64> = (0..segs).map(|i| (pts[(i + 1) % m] - pts[i]).norm()).collect();
        let length: f64 = chords.iter().sum();
        let h = length / segs as f64;
        if let Some((i, c)) = chords
            .iter()
            .enumerate()
            .find(|(_, c)| ((**c - h) / h).abs() > 1e-2)
        {
            return Err(CurveError::NonUniformSpacing { index: i, chord: *c, expected: h });
        }

        let weights = super::fd::five_point_weights();
        let mut samples = Vec::with_capacity(segs + 1);
        for k in 0..m {
            let (start, center) = if closed {
                (k as isize - 2, 2usize)
            } else {
                let start = (k as isize - 2).clamp(0, m as isize - 5);
                (start, (k as isize - start) as usize)
            };
            let mut d = [Vec3::zeros(); 4];
            for (order, dk) in d.iter_mut().enumerate() {
                let w = &weights[center][order + 1];
                for (j, wj) in w.iter().enumerate() {
                    let idx = (start + j as isize).rem_euclid(m as isize) as usize;
                    *dk += pts[idx] * *wj;
                }
                *dk /= h.powi(order as i32 + 1);
            }
            samples.push(WireSample { s: k as f64 * h, pos: pts[k], d });
        }
        if closed {
            let mut last = samples[0];
            last.s = length;
            samples.push(last);
        }
        let wire = WireCurve { samples, length, closed, spacing: h };
        wire.validate()?;
        Ok(wire)
    }

    /// Checks unit speed, monotone arclength and embeddedness.
    pub fn validate(&self) -> Result<(), CurveError> {
        for w in self.samples.windows(2) {
            if !(w[1].s > w[0].s) {
                return Err(CurveError::NonMonotone(w[0].s));
            }
        }
        for smp in &self.samples {
            let speed = smp.d[0].norm();
            if (speed - 1.0).abs() > UNIT_SPEED_TOL {
                return Err(CurveError::NotArclength { s: smp.s, speed });
            }
            if smp.d.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
                return Err(CurveError::Degenerate(format!("non-finite derivative at s={}", smp.s)));
            }
        }
        let gap = self.min_nonadjacent_distance();
        if !(gap > 1e-9 * self.length) {
            return Err(CurveError::NotEmbedded(gap));
        }
        Ok(())
    }

    /// Smallest distance between samples at least a few spacings apart
    /// along the curve (cyclically for closed wires), on a decimated grid.
    pub fn min_nonadjacent_distance(&self) -> f64 {
        let stride = (self.samples.len() / 1500).max(1);
        let idx: Vec<usize> = (0..self.sample_count()).step_by(stride).collect();
        let sep = 4.0 * stride as f64 * self.spacing;
        let mut best = f64::INFINITY;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                let mut ds = self.samples[j].s - self.samples[i].s;
                if self.closed {
                    ds = ds.min(self.length - ds);
                }
                if ds < sep {
                    continue;
                }
                best = best.min((self.samples[j].pos - self.samples[i].pos).norm());
            }
        }
        best
    }

    pub fn samples(&self) -> &[WireSample] {
        &self.samples
    }

    /// Number of distinct samples (the closing duplicate is excluded).
    pub fn sample_count(&self) -> usize {
        if self.closed {
            self.samples.len() - 1
        } else {
            self.samples.len()
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Wraps `s` into `[0, length)` for closed curves; identity otherwise.
    pub fn wrap(&self, s: f64) -> f64 {
        if self.closed {
            // rem_euclid rounds tiny negatives up to the period itself
            let r = s.rem_euclid(self.length);
            if r >= self.length { 0.0 } else { r }
        } else {
            s
        }
    }

    /// Index of the sample nearest to `s` (after wrapping).
    pub fn nearest_index(&self, s: f64) -> usize {
        let s = self.wrap(s);
        ((s / self.spacing).round().max(0.0) as usize).min(self.samples.len() - 1)
    }

    /// Taylor evaluation from the nearest sample.
    pub fn eval(&self, s: f64) -> WireJet {
        let s = self.wrap(s);
        let smp = &self.samples[self.nearest_index(s)];
        let h = s - smp.s;
        let [d1, d2, d3, d4] = smp.d;
        WireJet {
            pos: smp.pos + d1 * h + d2 * (h * h / 2.0) + d3 * (h.powi(3) / 6.0) + d4 * (h.powi(4) / 24.0),
            d1: d1 + d2 * h + d3 * (h * h / 2.0) + d4 * (h.powi(3) / 6.0),
            d2: d2 + d3 * h + d4 * (h * h / 2.0),
            d3: d3 + d4 * h,
        }
    }

    pub fn point(&self, s: f64) -> Vec3 {
        self.eval(s).pos
    }

    /// Curvature `|Γ''|` at sample `k`.
    pub fn curvature(&self, k: usize) -> f64 {
        self.samples[k].d[1].norm()
    }

    /// Torsion `det(Γ', Γ'', Γ''') / κ²` at sample `k`; zero where κ vanishes.
    pub fn torsion(&self, k: usize) -> f64 {
        let [d1, d2, d3, _] = self.samples[k].d;
        let k2 = d2.norm_squared();
        if k2 < 1e-24 {
            0.0
        } else {
            d1.cross(&d2).dot(&d3) / k2
        }
    }

    /// `(s, κ_max)` at the first sample attaining the maximum curvature.
    pub fn curvature_max(&self) -> (f64, f64) {
        let mut best = (0.0, f64::NEG_INFINITY);
        for k in 0..self.sample_count() {
            let c = self.curvature(k);
            if c > best.1 + 1e-12 {
                best = (self.samples[k].s, c);
            }
        }
        best
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> WireCurve {
        let n = self.samples.len();
        let samples = (0..n)
            .map(|i| {
                let src = &self.samples[n - 1 - i];
                let [d1, d2, d3, d4] = src.d;
                WireSample { s: self.length - src.s, pos: src.pos, d: [-d1, d2, -d3, d4] }
            })
            .map(|mut smp| {
                if smp.s.abs() < 1e-12 * self.length {
                    smp.s = 0.0;
                }
                smp
            })
            .collect::<Vec<_>>();
        let mut out = WireCurve { samples, length: self.length, closed: self.closed, spacing: self.spacing };
        // keep the grid exact
        for (i, smp) in out.samples.iter_mut().enumerate() {
            smp.s = if i == n - 1 { self.length } else { i as f64 * self.spacing };
        }
        out
    }

    /// Applies the rigid motion `p -> rot * p + shift`.
    pub fn transformed(&self, rot: &nalgebra::Rotation3<f64>, shift: &Vec3) -> WireCurve {
        let mut out = self.clone();
        for smp in &mut out.samples {
            smp.pos = rot * smp.pos + shift;
            for d in &mut smp.d {
                *d = rot * *d;
            }
        }
        out
    }

    /// Arclength-uniform samples `(s, point)` of `[s0, s1]`.
    pub fn sample_range(&self, s0: f64, s1: f64, count: usize) -> Vec<Vec3> {
        let count = count.max(2);
        (0..count)
            .map(|i| self.point(s0 + (s1 - s0) * i as f64 / (count - 1) as f64))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::family::CurveFamily;
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn ellipse_length_matches_series() {
        // Ramanujan's second approximation is accurate to ~1e-10 at this eccentricity
        let w = WireCurve::from_parametric(&CurveFamily::ellipse(2.0, 1.0), 4001).unwrap();
        let (a, b) = (2.0f64, 1.0f64);
        let h = ((a - b) / (a + b)).powi(2);
        let ram = PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()));
        assert!((w.length() - ram).abs() < 1e-5, "{} vs {}", w.length(), ram);
        let (_, kmax) = w.curvature_max();
        assert!((kmax - 2.0).abs() < 1e-9);
    }

    #[test]
    fn circle_is_unit_speed_and_closed() {
        let w = WireCurve::from_parametric(&CurveFamily::circle(1.0), 2001).unwrap();
        assert!((w.length() - TAU).abs() < 1e-11);
        for k in 0..w.sample_count() {
            assert!((w.curvature(k) - 1.0).abs() < 1e-10);
        }
        assert!((w.point(0.0) - w.point(w.length())).norm() < 1e-12);
        for s in [-1e-17, -1e-16, -1e-300, w.length() - 1e-16] {
            let r = w.wrap(s);
            assert!((0.0..w.length()).contains(&r), "{s:e} wrapped to {r}");
            assert!((w.point(s) - w.point(0.0)).norm() < 1e-12, "{s:e}");
        }
    }

    #[test]
    fn sampled_wire_recovers_derivatives() {
        let analytic = WireCurve::from_parametric(&CurveFamily::Helix { radius: 0.8, rise: 0.6, turns: 1.0 }, 2001).unwrap();
        let pts: Vec<Vec3> = analytic.samples().iter().map(|s| s.pos).collect();
        let sampled = WireCurve::from_points(&pts, false).unwrap();
        for k in [3usize, 500, 1000, 1997] {
            let (a, b) = (&analytic.samples()[k], &sampled.samples()[k]);
            assert!((a.d[0] - b.d[0]).norm() < 1e-6);
            assert!((a.d[1] - b.d[1]).norm() < 1e-4);
        }
    }

    #[test]
    fn taylor_eval_between_samples() {
        let w = WireCurve::from_parametric(&CurveFamily::circle(1.0), 1001).unwrap();
        let s = 1.234_567;
        let j = w.eval(s);
        assert!((j.pos - Vec3::new(s.cos(), s.sin(), 0.0)).norm() < 1e-13);
        assert!((j.d2 + Vec3::new(s.cos(), s.sin(), 0.0)).norm() < 1e-8);
    }

    #[test]
    fn non_unit_speed_samples_rejected() {
        let pts: Vec<Vec3> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.1;
                Vec3::new(t * t, 0.0, 0.0)
            })
            .collect();
        assert!(matches!(WireCurve::from_points(&pts, false), Err(CurveError::NonUniformSpacing { .. })));
    }

    #[test]
    fn self_touching_points_rejected() {
        // figure-eight sampled uniformly in t crosses itself
        let n = 400;
        let pts: Vec<Vec3> = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                Vec3::new(t.sin(), (2.0 * t).sin() / 2.0, 0.0)
            })
            .collect();
        let err = WireCurve::from_points(&pts, true).unwrap_err();
        assert!(matches!(err, CurveError::NotEmbedded(_) | CurveError::NonUniformSpacing { .. }));
    }
}
