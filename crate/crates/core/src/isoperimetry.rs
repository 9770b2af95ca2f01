//! Weighted isoperimetry on the half-strip `T_Y = {x >= 0, 0 <= y < Y}`
//! with weight `1 - m y`.
//!
//! Perimeter convention: the left wall `x = 0` and an optional right wall
//! `x = x_max` are not counted; the bottom edge `y = 0` is.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsoError {
    #[error("weight slope must satisfy 0 <= mY < 1 (m={m}, Y={y})")]
    BadWeight { m: f64, y: f64 },
    #[error("strip height must be positive, got {0}")]
    BadHeight(f64),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("intervals overlap or are out of order at index {0}")]
    Overlap(usize),
    #[error("interval {0} not contained in [0, Y)")]
    OutOfRange(usize),
}

pub type Result<T> = std::result::Result<T, IsoError>;

/// Absolute and relative slack used by every `holds` verdict.
pub const HOLDS_TOL: f64 = 1e-9;

fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + HOLDS_TOL + HOLDS_TOL * lhs.abs().max(rhs.abs())
}

fn check_weight(m: f64, y: f64) -> Result<()> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(IsoError::BadHeight(y));
    }
    if !(m >= 0.0) || m * y >= 1.0 {
        return Err(IsoError::BadWeight { m, y });
    }
    Ok(())
}

/// A union of interior-disjoint simple polygons in the half-strip.
#[derive(Debug, Clone, PartialEq)]
pub struct StripRegion {
    y: f64,
    x_max: Option<f64>,
    m: f64,
    polygons: Vec<Vec<[f64; 2]>>,
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed segments share a point.
fn segments_touch(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Segments cross at a point interior to both.
fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn is_simple(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in i + 1..n {
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // adjacent edges may only share their common vertex
                let shared = if j == i + 1 { b } else { a };
                let (other_a, other_b) = if j == i + 1 { (a, d) } else { (b, c) };
                if orient(a, b, d) == 0.0 && orient(c, d, a) == 0.0 {
                    let (p, q) = if j == i + 1 { (a, b) } else { (c, d) };
                    // collinear: fold-back is a self-overlap
                    let dir1 = [q[0] - p[0], q[1] - p[1]];
                    let dir2 = [other_b[0] - shared[0], other_b[1] - shared[1]];
                    let _ = other_a;
                    if dir1[0] * dir2[0] + dir1[1] * dir2[1] < 0.0 && j == i + 1 {
                        return false;
                    }
                }
                continue;
            }
            if segments_touch(a, b, c, d) {
                return false;
            }
        }
    }
    polygon_area(poly).abs() > 0.0
}

fn point_in(poly: &[[f64; 2]], q: [f64; 2]) -> bool {
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

/// Signed shoelace area.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        a[0] * b[1] - a[1] * b[0]
    }).sum::<f64>() / 2.0
}

fn edge_midpoints(poly: &[[f64; 2]]) -> impl Iterator<Item = [f64; 2]> + '_ {
    let n = poly.len();
    (0..n).map(move |i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
    })
}

impl StripRegion {
    pub fn new(y: f64, m: f64, x_max: Option<f64>, polygons: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        check_weight(m, y)?;
        if let Some(xm) = x_max {
            if !(xm > 0.0) {
                return Err(IsoError::InvalidRegion(format!("right wall at {xm}")));
            }
        }
        for (k, poly) in polygons.iter().enumerate() {
            for p in poly {
                let in_x = p[0] >= 0.0 && x_max.is_none_or(|xm| p[0] <= xm);
                if !(in_x && p[1] >= 0.0 && p[1] < y) {
                    return Err(IsoError::InvalidRegion(format!("polygon {k} vertex {p:?} outside the strip")));
                }
            }
            if !is_simple(poly) {
                return Err(IsoError::InvalidRegion(format!("polygon {k} is not simple")));
            }
        }
        for i in 0..polygons.len() {
            for j in i + 1..polygons.len() {
                let (p, q) = (&polygons[i], &polygons[j]);
                let crossing = (0..p.len()).any(|a| {
                    (0..q.len()).any(|b| segments_cross(p[a], p[(a + 1) % p.len()], q[b], q[(b + 1) % q.len()]))
                });
                let nested = edge_midpoints(p).any(|c| point_in(q, c)) || edge_midpoints(q).any(|c| point_in(p, c));
                if crossing || nested {
                    return Err(IsoError::InvalidRegion(format!("polygons {i} and {j} overlap")));
                }
            }
        }
        Ok(StripRegion { y, x_max, m, polygons })
    }

    pub fn empty(y: f64, m: f64) -> Result<Self> {
        Self::new(y, m, None, Vec::new())
    }

    pub fn height(&self) -> f64 {
        self.y
    }

    pub fn slope(&self) -> f64 {
        self.m
    }

    pub fn right_wall(&self) -> Option<f64> {
        self.x_max
    }

    pub fn polygons(&self) -> &[Vec<[f64; 2]>] {
        &self.polygons
    }

    pub fn area(&self) -> f64 {
        self.polygons.iter().map(|p| polygon_area(p).abs()).sum()
    }

    /// Same region in coordinates scaled by `t`, with `m` scaled by `1/t`.
    pub fn dilated(&self, t: f64) -> Result<Self> {
        let polys = self.polygons.iter().map(|p| p.iter().map(|v| [v[0] * t, v[1] * t]).collect()).collect();
        Self::new(self.y * t, self.m / t, self.x_max.map(|x| x * t), polys)
    }

    /// Same region with weight slope `m`.
    pub fn with_slope(&self, m: f64) -> Result<Self> {
        Self::new(self.y, m, self.x_max, self.polygons.clone())
    }
}

fn on_wall(a: [f64; 2], b: [f64; 2], x_max: Option<f64>) -> bool {
    (a[0] == 0.0 && b[0] == 0.0) || x_max.is_some_and(|xm| a[0] == xm && b[0] == xm)
}

/// `(1 - m y)`-weighted length of the counted boundary.
pub fn weighted_perimeter(k: &StripRegion) -> f64 {
    let mut total = 0.0;
    for poly in &k.polygons {
        let n = poly.len();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if on_wall(a, b, k.x_max) {
                continue;
            }
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            // weight is affine in y, so the midpoint rule is exact
            total += len * (1.0 - k.m * (a[1] + b[1]) / 2.0);
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// The bound's hypothesis is met. Always true for the first bound.
    pub applicable: bool,
    pub holds: bool,
}

/// `A(K) <= P^2 / pi * (1 - mY)^-2`.
pub fn iso_bound_1(k: &StripRegion) -> BoundCheck {
    let p = weighted_perimeter(k);
    let lhs = k.area();
    let rhs = p * p / PI / (1.0 - k.m * k.y).powi(2);
    BoundCheck { lhs, rhs, applicable: true, holds: holds(lhs, rhs) }
}

/// `A(K) <= (P - pi Y / (1 - mY)) Y + pi Y^2 / 2`, applicable when `P > pi Y (1 - mY)`.
pub fn iso_bound_2(k: &StripRegion) -> BoundCheck {
    bound_2_with(k, k.y / (1.0 - k.m * k.y))
}

/// Variant of the second bound with the cap-perimeter term `pi Y (1 - mY)`
/// that the slicing argument produces; agrees with [`iso_bound_2`] at `m = 0`.
pub fn iso_bound_2_sliced(k: &StripRegion) -> BoundCheck {
    bound_2_with(k, k.y * (1.0 - k.m * k.y))
}

fn bound_2_with(k: &StripRegion, cap: f64) -> BoundCheck {
    let p = weighted_perimeter(k);
    let lhs = k.area();
    let applicable = p > PI * k.y * (1.0 - k.m * k.y);
    let rhs = (p - PI * cap) * k.y + PI * k.y * k.y / 2.0;
    BoundCheck { lhs, rhs, applicable, holds: !applicable || holds(lhs, rhs) }
}

/// Disjoint closed intervals in `[0, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalUnion {
    y: f64,
    intervals: Vec<[f64; 2]>,
}

impl IntervalUnion {
    /// Intervals must be sorted, pairwise disjoint, and satisfy `0 <= a < b < Y`.
    pub fn new(y: f64, intervals: Vec<[f64; 2]>) -> Result<Self> {
        if !(y > 0.0) {
            return Err(IsoError::BadHeight(y));
        }
        for (i, iv) in intervals.iter().enumerate() {
            if !(iv[0] >= 0.0 && iv[0] < iv[1] && iv[1] < y) {
                return Err(IsoError::OutOfRange(i));
            }
            if i > 0 && intervals[i - 1][1] >= iv[0] {
                return Err(IsoError::Overlap(i));
            }
        }
        Ok(IntervalUnion { y, intervals })
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn length(&self) -> f64 {
        self.intervals.iter().map(|iv| iv[1] - iv[0]).sum()
    }
}

/// `|J| <= Y * sum over endpoints of (1 - m y)`.
pub fn interval_iso(j: &IntervalUnion, m: f64) -> Result<BoundCheck> {
    check_weight(m, j.y)?;
    let lhs = j.length();
    let rhs = j.y * j.intervals.iter().map(|iv| (1.0 - m * iv[0]) + (1.0 - m * iv[1])).sum::<f64>();
    Ok(BoundCheck { lhs, rhs, applicable: true, holds: holds(lhs, rhs) })
}

/// Quarter disc of radius `r` at the origin corner, as an `n`-gon on the arc.
pub fn quarter_disc(r: f64, n: usize) -> Vec<[f64; 2]> {
    let mut v = vec![[0.0, 0.0]];
    for i in 0..=n {
        let t = PI / 2.0 * i as f64 / n as f64;
        v.push([r * t.cos(), r * t.sin()]);
    }
    v.pop();
    v.push([0.0, r]);
    v
}

/// Rectangle with corners `(x0, y0)` and `(x1, y1)`, counterclockwise.
pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<[f64; 2]> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

/// Column data of an x-monotone rectilinear polygon: column `c` spans
/// `[xs[c], xs[c+1]] x [lo[c], hi[c]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub xs: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Histogram {
    /// Random columns whose vertical extents overlap their neighbors'.
    pub fn random<R: Rng>(rng: &mut R, y: f64, x0: f64, max_cols: usize) -> Self {
        let cols = rng.random_range(1..=max_cols);
        let mut xs = vec![x0];
        for _ in 0..cols {
            let w = rng.random_range(0.02..1.5) * y;
            xs.push(xs.last().unwrap() + w);
        }
        let top = y * (1.0 - 1e-6);
        let mut lo: Vec<f64> = Vec::with_capacity(cols);
        let mut hi: Vec<f64> = Vec::with_capacity(cols);
        for c in 0..cols {
            loop {
                let a = if rng.random_bool(0.4) { 0.0 } else { rng.random_range(0.0..top) };
                let b = if rng.random_bool(0.3) { top } else { rng.random_range(0.0..top) };
                let (a, b) = (a.min(b), a.max(b));
                if b - a < 1e-3 * y {
                    continue;
                }
                if c > 0 && a.max(lo[c - 1]) >= b.min(hi[c - 1]) {
                    continue;
                }
                lo.push(a);
                hi.push(b);
                break;
            }
        }
        Histogram { xs, lo, hi }
    }

    /// Counterclockwise boundary with redundant vertices removed.
    pub fn polygon(&self) -> Vec<[f64; 2]> {
        let cols = self.lo.len();
        let mut v = Vec::with_capacity(4 * cols);
        for c in 0..cols {
            v.push([self.xs[c], self.lo[c]]);
            v.push([self.xs[c + 1], self.lo[c]]);
        }
        for c in (0..cols).rev() {
            v.push([self.xs[c + 1], self.hi[c]]);
            v.push([self.xs[c], self.hi[c]]);
        }
        drop_redundant(v)
    }

    /// Union with its mirror image across `x = xs[0]`, shifted right by the width.
    pub fn doubled(&self) -> Self {
        let (x0, w) = (self.xs[0], self.xs.last().unwrap() - self.xs[0]);
        let mut xs: Vec<f64> = self.xs.iter().rev().map(|x| x0 + w - (x - x0)).collect();
        xs.extend(self.xs.iter().skip(1).map(|x| x + w));
        let mirror = |v: &[f64]| v.iter().rev().chain(v.iter()).copied().collect::<Vec<_>>();
        Histogram { xs, lo: mirror(&self.lo), hi: mirror(&self.hi) }
    }
}

/// Random x-monotone rectilinear polygon starting at `x0`.
pub fn random_histogram<R: Rng>(rng: &mut R, y: f64, x0: f64, max_cols: usize) -> Vec<[f64; 2]> {
    Histogram::random(rng, y, x0, max_cols).polygon()
}

/// Removes repeated and collinear-through vertices.
fn drop_redundant(mut v: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    loop {
        let n = v.len();
        let bad = (0..n).find(|&i| {
            let (a, b, c) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
            a == b || orient(a, b, c) == 0.0
        });
        match bad {
            Some(i) if n > 3 => {
                v.remove(i);
            }
            _ => return v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzSummary {
    pub cases: usize,
    pub bound1_violations: usize,
    pub bound2_applicable: usize,
    pub bound2_violations: usize,
    pub bound2_sliced_violations: usize,
    /// Largest `(lhs - rhs) / Y^2` seen for each bound (applicable cases only).
    pub bound1_worst: f64,
    pub bound2_worst: f64,
    pub bound2_sliced_worst: f64,
}

impl Default for FuzzSummary {
    fn default() -> Self {
        let w = f64::NEG_INFINITY;
        FuzzSummary {
            cases: 0,
            bound1_violations: 0,
            bound2_applicable: 0,
            bound2_violations: 0,
            bound2_sliced_violations: 0,
            bound1_worst: w,
            bound2_worst: w,
            bound2_sliced_worst: w,
        }
    }
}

impl FuzzSummary {
    fn merge(mut self, o: FuzzSummary) -> FuzzSummary {
        self.cases += o.cases;
        self.bound1_violations += o.bound1_violations;
        self.bound2_applicable += o.bound2_applicable;
        self.bound2_violations += o.bound2_violations;
        self.bound2_sliced_violations += o.bound2_sliced_violations;
        self.bound1_worst = self.bound1_worst.max(o.bound1_worst);
        self.bound2_worst = self.bound2_worst.max(o.bound2_worst);
        self.bound2_sliced_worst = self.bound2_sliced_worst.max(o.bound2_sliced_worst);
        self
    }

    pub fn record(&mut self, k: &StripRegion) {
        let y2 = k.y * k.y;
        let ratio = |b: &BoundCheck| (b.lhs - b.rhs) / y2;
        let b1 = iso_bound_1(k);
        let b2 = iso_bound_2(k);
        let b2s = iso_bound_2_sliced(k);
        self.cases += 1;
        self.bound1_violations += usize::from(!b1.holds);
        self.bound1_worst = self.bound1_worst.max(ratio(&b1));
        if b2.applicable {
            self.bound2_applicable += 1;
            self.bound2_violations += usize::from(!b2.holds);
            self.bound2_sliced_violations += usize::from(!b2s.holds);
            self.bound2_worst = self.bound2_worst.max(ratio(&b2));
            self.bound2_sliced_worst = self.bound2_sliced_worst.max(ratio(&b2s));
        }
    }
}

const BATCH: usize = 250;

fn batch_rng(seed: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

/// Random regions of one to three histogram polygons placed side by side,
/// some touching the left wall or the bottom.
pub fn random_region<R: Rng>(rng: &mut R, y: f64, m: f64) -> StripRegion {
    let count = rng.random_range(1..=3);
    let mut x = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..y) };
    let mut polys = Vec::with_capacity(count);
    for _ in 0..count {
        let p = random_histogram(rng, y, x, 6);
        let right = p.iter().map(|v| v[0]).fold(0.0, f64::max);
        polys.push(p);
        x = right + rng.random_range(0.01..1.0) * y;
    }
    StripRegion::new(y, m, None, polys).expect("generated region is valid")
}

/// Fuzzes both strip bounds with `count` random regions. Deterministic in `seed`.
pub fn fuzz_regions(y: f64, m: f64, count: usize, seed: u64) -> FuzzSummary {
    let batches = count.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(seed, b);
            let mut s = FuzzSummary::default();
            for _ in 0..BATCH.min(count - b * BATCH) {
                s.record(&random_region(&mut rng, y, m));
            }
            s
        })
        .reduce(FuzzSummary::default, FuzzSummary::merge)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalFuzzSummary {
    pub cases: usize,
    pub violations: usize,
    pub worst_ratio: f64,
}

/// Random unions of up to `max_intervals` intervals in `[0, Y)` with random
/// slope `m`, `mY <= 0.5`.
pub fn fuzz_intervals(y: f64, max_intervals: usize, count: usize, seed: u64) -> IntervalFuzzSummary {
    let batches = count.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(seed, b);
            let mut s = IntervalFuzzSummary::default();
            for _ in 0..BATCH.min(count - b * BATCH) {
                let m = rng.random_range(0.0..=0.5) / y;
                let j = random_intervals(&mut rng, y, max_intervals);
                let c = interval_iso(&j, m).expect("slope in range");
                s.cases += 1;
                s.violations += usize::from(!c.holds);
                if c.rhs > 0.0 {
                    s.worst_ratio = s.worst_ratio.max(c.lhs / c.rhs);
                }
            }
            s
        })
        .reduce(IntervalFuzzSummary::default, |a, b| IntervalFuzzSummary {
            cases: a.cases + b.cases,
            violations: a.violations + b.violations,
            worst_ratio: a.worst_ratio.max(b.worst_ratio),
        })
}

pub fn random_intervals<R: Rng>(rng: &mut R, y: f64, max_intervals: usize) -> IntervalUnion {
    let n = rng.random_range(0..=max_intervals);
    let mut cuts: Vec<f64> = (0..2 * n).map(|_| rng.random_range(0.0..y)).collect();
    if n > 0 && rng.random_bool(0.3) {
        cuts[0] = 0.0;
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let ivs: Vec<[f64; 2]> = cuts.chunks_exact(2).map(|c| [c[0], c[1]]).filter(|c| c[0] < c[1]).collect();
    IntervalUnion::new(y, ivs).expect("sorted distinct cuts")
}
