use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::crescent::{first_flipped, metric_of, metric_weights, RefTriangle};
use super::verify::verify_all;
use super::{CrescentMesh, Result, SolveError, SolveReport};
use crate::curvegeom::{TubularChart, WireCurve};
use crate::harmlevel::{assemble_interior, DiscMesh};
use crate::linalg::BandedCholesky;
use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Stop once the area changes by less than this fraction per descent step.
    pub energy_tol: f64,
    /// Allowed `|ℓ(M) - L|` as a fraction of `ℓ(Γ)`.
    pub constraint_tol: f64,
    /// Cap on the total number of inner descent steps.
    pub max_iterations: usize,
    /// Descent steps per reference-metric update.
    pub inner_iterations: usize,
    /// L-BFGS memory.
    pub memory: usize,
    /// Initial penalty `ρ`; defaults to `1 / (κ_max λ)`.
    pub penalty: Option<f64>,
    pub seed: u64,
    /// Uniform random displacement of the free vertices, as a fraction of
    /// the smallest triangle altitude; zero disables it.
    pub perturbation: f64,
    /// Keep the ends of the attached segment where the initial crescent has them.
    pub fix_ends: bool,
    /// Relative slack for the near-wire bounds.
    pub slack: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            energy_tol: 1e-9,
            constraint_tol: 1e-6,
            max_iterations: 100_000,
            inner_iterations: 40,
            memory: 8,
            penalty: None,
            seed: 0,
            perturbation: 0.0,
            fix_ends: false,
            slack: 0.5,
        }
    }
}

/// Wire, thread budget `L = ℓ(Γ) - λ` and solver settings.
#[derive(Debug, Clone)]
pub struct ThreadProblem {
    wire: Arc<WireCurve>,
    lambda: f64,
    pub settings: SolverSettings,
}

impl ThreadProblem {
    pub fn new(wire: Arc<WireCurve>, lambda: f64, settings: SolverSettings) -> Result<Self> {
        let length = wire.length();
        let gap = if wire.is_closed() { 0.0 } else { (wire.point(length) - wire.point(0.0)).norm() };
        let budget = length - lambda;
        if !(budget > gap && budget < length) {
            return Err(SolveError::BadDeficit { lambda, length, gap });
        }
        Ok(ThreadProblem { wire, lambda, settings })
    }

    pub fn wire(&self) -> &Arc<WireCurve> {
        &self.wire
    }

    pub fn deficit(&self) -> f64 {
        self.lambda
    }

    pub fn budget(&self) -> f64 {
        self.wire.length() - self.lambda
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub crescent: CrescentMesh,
    pub report: SolveReport,
    /// Final length multiplier `μ`.
    pub multiplier: f64,
    pub penalty: f64,
    /// Area after each reference update.
    pub area_history: Vec<f64>,
    /// `ℓ(M) - L` after each reference update.
    pub constraint_history: Vec<f64>,
    /// Accepted descent steps in each outer iteration.
    pub step_history: Vec<usize>,
}

/// Damped metric updates tried before keeping the previous metric.
const METRIC_HALVINGS: usize = 8;
/// Metric updates may not push the worst reference triangle below this
/// fraction of the worst starting one.
const QUALITY_FLOOR: f64 = 0.25;

/// Consecutive outer iterations without an accepted step before giving up.
const MAX_IDLE: usize = 20;

/// Interior elimination for one reference metric.
struct Stiffness {
    frames: Vec<Frame>,
    chol: BandedCholesky,
    coupling: Vec<(usize, usize, f64)>,
    interior: Vec<usize>,
}

struct Frame {
    tri: [usize; 3],
    q1x: f64,
    ratio: f64,
    q2y: f64,
    area: f64,
}

impl Stiffness {
    fn new(mesh: &DiscMesh, metric: &[RefTriangle]) -> Result<Self> {
        let weights = metric_weights(mesh.triangles(), metric);
        let (k, coupling) = assemble_interior(mesh, &weights)?;
        let chol = k.cholesky().map_err(|e| SolveError::Invalid(format!("reference stiffness: {e}")))?;
        let frames = mesh
            .triangles()
            .iter()
            .zip(metric)
            .map(|(&tri, m)| Frame { tri, q1x: m.q1x, ratio: m.q2x / m.q1x, q2y: m.q2y, area: m.area() })
            .collect();
        Ok(Stiffness { frames, chol, coupling, interior: mesh.interior() })
    }

    fn fill_interior(&self, pos: &mut [Vec3]) {
        let mut rhs = vec![0.0; self.interior.len()];
        for c in 0..3 {
            rhs.iter_mut().for_each(|r| *r = 0.0);
            for &(row, v, w) in &self.coupling {
                rhs[row] += w * pos[v][c];
            }
            self.chol.solve_in_place(&mut rhs);
            for (row, &v) in self.interior.iter().enumerate() {
                pos[v][c] = rhs[row];
            }
        }
    }

    /// `D` and `∂D/∂X_v` at every vertex, from the affine gradient on each
    /// triangle. Summing squares per triangle avoids the cancellation between
    /// large cotan weights of opposite sign on flat reference triangles.
    fn energy(&self, pos: &[Vec3], grad: &mut [Vec3]) -> f64 {
        grad.iter_mut().for_each(|g| *g = Vec3::zeros());
        let mut d = 0.0;
        for f in &self.frames {
            let [a, b, c] = f.tri;
            let (dx1, dx2) = (pos[b] - pos[a], pos[c] - pos[a]);
            let u = dx1 / f.q1x;
            let v = (dx2 - dx1 * f.ratio) / f.q2y;
            d += 0.5 * f.area * (u.norm_squared() + v.norm_squared());
            let g1 = (u / f.q1x - v * (f.ratio / f.q2y)) * f.area;
            let g2 = v * (f.area / f.q2y);
            grad[b] += g1;
            grad[c] += g2;
            grad[a] -= g1 + g2;
        }
        d
    }
}

/// Augmented-Lagrangian objective over the boundary unknowns: attachment
/// parameters followed by upper-arc coordinates.
struct Objective<'a> {
    wire: &'a WireCurve,
    stiff: &'a Stiffness,
    metric: &'a [RefTriangle],
    base: &'a [Vec3],
    tris: &'a [[usize; 3]],
    lower: &'a [usize],
    upper: &'a [usize],
    thread: &'a [usize],
    lambda: f64,
    mu: f64,
    rho: f64,
    fix_ends: bool,
}

/// The parts of an [`Objective`] that stay fixed across outer iterations.
struct Layout<'a> {
    wire: &'a WireCurve,
    tris: &'a [[usize; 3]],
    lower: &'a [usize],
    upper: &'a [usize],
    thread: &'a [usize],
    lambda: f64,
    fix_ends: bool,
}

impl<'a> Layout<'a> {
    fn objective(&self, stiff: &'a Stiffness, metric: &'a [RefTriangle], base: &'a [Vec3], mu: f64, rho: f64) -> Objective<'a> {
        Objective {
            wire: self.wire,
            stiff,
            metric,
            base,
            tris: self.tris,
            lower: self.lower,
            upper: self.upper,
            thread: self.thread,
            lambda: self.lambda,
            mu,
            rho,
            fix_ends: self.fix_ends,
        }
    }
}

struct Eval {
    value: f64,
    grad: Vec<f64>,
    constraint: f64,
    positions: Vec<Vec3>,
}

impl Objective<'_> {
    fn unpack(&self, z: &[f64], pos: &mut [Vec3], tangents: &mut Vec<Vec3>) {
        tangents.clear();
        for (k, &v) in self.lower.iter().enumerate() {
            let j = self.wire.eval(z[k]);
            pos[v] = j.pos;
            tangents.push(j.d1);
        }
        let off = self.lower.len();
        for (m, &v) in self.upper.iter().enumerate() {
            pos[v] = Vec3::new(z[off + 3 * m], z[off + 3 * m + 1], z[off + 3 * m + 2]);
        }
    }

    fn project(&self, z: &mut [f64], anchor: &[f64]) {
        let n = self.lower.len();
        if self.fix_ends {
            z[0] = anchor[0];
            z[n - 1] = anchor[n - 1];
        }
        if !self.wire.is_closed() {
            let len = self.wire.length();
            z[..n].iter_mut().for_each(|t| *t = t.clamp(0.0, len));
        }
        for k in 1..n {
            z[k] = z[k].max(z[k - 1]);
        }
        if self.fix_ends {
            for k in (0..n - 1).rev() {
                z[k] = z[k].min(z[k + 1]);
            }
        }
    }

    /// `None` when the trial point flips a triangle against the reference.
    fn eval(&self, z: &[f64], scratch: &mut Vec<Vec3>) -> Option<Eval> {
        let mut pos = self.base.to_vec();
        let mut tangents = Vec::with_capacity(self.lower.len());
        self.unpack(z, &mut pos, &mut tangents);
        self.stiff.fill_interior(&mut pos);
        if first_flipped(self.tris, self.metric, &pos).is_some() {
            return None;
        }
        scratch.resize(pos.len(), Vec3::zeros());
        let d = self.stiff.energy(&pos, scratch);
        let n = self.lower.len();
        let mut len = 0.0;
        let mut units = Vec::with_capacity(self.thread.len() - 1);
        for w in self.thread.windows(2) {
            let e = pos[w[1]] - pos[w[0]];
            let l = e.norm();
            len += l;
            units.push(if l > 0.0 { e / l } else { Vec3::zeros() });
        }
        let g = len - (z[n - 1] - z[0]) + self.lambda;
        // inequality form: the penalty switches off once the thread is slack enough
        let active = g > -self.mu / (2.0 * self.rho);
        let coef = if active { self.mu + 2.0 * self.rho * g } else { 0.0 };
        let penalty = if active { self.mu * g + self.rho * g * g } else { -self.mu * self.mu / (4.0 * self.rho) };
        for (m, &v) in self.thread.iter().enumerate() {
            let mut dl = Vec3::zeros();
            if m > 0 {
                dl += units[m - 1];
            }
            if m < units.len() {
                dl -= units[m];
            }
            scratch[v] += dl * coef;
        }
        let mut grad = vec![0.0; z.len()];
        for (k, &v) in self.lower.iter().enumerate() {
            grad[k] = scratch[v].dot(&tangents[k]);
        }
        grad[0] += coef;
        grad[n - 1] -= coef;
        if self.fix_ends {
            grad[0] = 0.0;
            grad[n - 1] = 0.0;
        }
        for (m, &v) in self.upper.iter().enumerate() {
            for c in 0..3 {
                grad[n + 3 * m + c] = scratch[v][c];
            }
        }
        Some(Eval { value: d + penalty, grad, constraint: g, positions: pos })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projected L-BFGS with Armijo backtracking. Returns the final point, its
/// evaluation and the number of accepted steps.
fn lbfgs(obj: &Objective, z0: Vec<f64>, iterations: usize, memory: usize, first_step: f64) -> Option<(Vec<f64>, Eval, usize)> {
    let mut scratch = Vec::new();
    let mut z = z0;
    let anchor = z.clone();
    let mut cur = obj.eval(&z, &mut scratch)?;
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(memory);
    let mut steps = 0;
    for _ in 0..iterations {
        let g = &cur.grad;
        let gmax = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if gmax == 0.0 {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let (dir_scale, fresh) = match hist.back() {
            Some((s, y, _)) => (dot(s, y) / dot(y, y), false),
            None => (first_step / gmax, true),
        };
        q.iter_mut().for_each(|x| *x *= dir_scale);
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut d: Vec<f64> = q.iter().map(|x| -x).collect();
        if dot(&d, g) >= 0.0 || fresh && d.iter().any(|x| !x.is_finite()) {
            hist.clear();
            d = g.iter().map(|x| -x * first_step / gmax).collect();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<f64> = z.iter().zip(&d).map(|(x, di)| x + step * di).collect();
            obj.project(&mut trial, &anchor);
            let moved: Vec<f64> = trial.iter().zip(&z).map(|(a, b)| a - b).collect();
            let decrease = dot(g, &moved);
            if decrease < 0.0 {
                if let Some(e) = obj.eval(&trial, &mut scratch) {
                    if e.value <= cur.value + 1e-4 * decrease {
                        accepted = Some((trial, e, moved));
                        break;
                    }
                }
            } else if moved.iter().all(|m| *m == 0.0) {
                break;
            }
            step *= 0.5;
        }
        let Some((trial, e, s)) = accepted else {
            if hist.is_empty() {
                break;
            }
            hist.clear();
            continue;
        };
        let y: Vec<f64> = e.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if hist.len() == memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let change = cur.value - e.value;
        z = trial;
        cur = e;
        steps += 1;
        if change <= 1e-15 * cur.value.abs() {
            break;
        }
    }
    Some((z, cur, steps))
}

fn perturbed(init: &CrescentMesh, settings: &SolverSettings) -> Result<CrescentMesh> {
    if settings.perturbation <= 0.0 {
        return Ok(init.clone());
    }
    let mesh = init.mesh();
    let p = init.positions();
    let altitude = mesh
        .triangles()
        .iter()
        .map(|t| {
            let twice_area = (p[t[1]] - p[t[0]]).cross(&(p[t[2]] - p[t[0]])).norm();
            let longest = [(0, 1), (1, 2), (2, 0)].iter().map(|&(a, b)| (p[t[a]] - p[t[b]]).norm()).fold(0.0, f64::max);
            twice_area / longest
        })
        .fold(f64::INFINITY, f64::min);
    let amp = settings.perturbation * altitude;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut pos = init.positions().to_vec();
    for (v, p) in pos.iter_mut().enumerate() {
        if mesh.arc(v) != Some(crate::harmlevel::BoundaryArc::Lower) {
            for c in 0..3 {
                p[c] += amp * rng.random_range(-1.0..1.0);
            }
        }
    }
    let c = init.with_positions(pos, init.attachment().to_vec())?;
    match c.first_flipped() {
        Some(t) => Err(SolveError::Tangled { iteration: 0, triangle: t }),
        None => Ok(c),
    }
}

/// Least-squares `μ` with `∇A + μ∇ℓ = 0` at the thread vertices.
fn kkt_multiplier(tris: &[[usize; 3]], thread: &[usize], pos: &[Vec3]) -> Option<f64> {
    let mut area_grad = vec![Vec3::zeros(); pos.len()];
    for &[a, b, c] in tris {
        let n = (pos[b] - pos[a]).cross(&(pos[c] - pos[a]));
        let Some(n) = n.try_normalize(0.0) else { continue };
        for (v, p, q) in [(a, b, c), (b, c, a), (c, a, b)] {
            area_grad[v] += 0.5 * n.cross(&(pos[q] - pos[p]));
        }
    }
    // the corner slivers are too stiff to resolve, so use the middle half of the thread
    let m = thread.len();
    let (mut num, mut den) = (0.0, 0.0);
    for k in m / 4..3 * m / 4 {
        let v = thread[k];
        let dl = (pos[v] - pos[thread[k - 1]]).normalize() + (pos[v] - pos[thread[k + 1]]).normalize();
        num -= area_grad[v].dot(&dl);
        den += dl.norm_squared();
    }
    (den > 0.0).then(|| (num / den).max(0.0))
}

/// Length-constrained Dirichlet minimization.
///
/// Each outer step moves the per-triangle reference metric toward the
/// current surface, eliminates the interior vertices exactly (their discrete
/// harmonic extension) and runs projected L-BFGS on the attachment parameters
/// and thread vertices against `D` plus the augmented-Lagrangian term for
/// `g = ℓ(M) - L ≤ 0`. Then `μ ← max(0, μ + 2ρg)`, and `ρ` doubles whenever
/// the violation fails to shrink by 4x. Repeated metric updates drive
/// `D - A` to zero, so `D` decreases to the discrete area minimum.
pub fn minimize(problem: &ThreadProblem, init: &CrescentMesh) -> Result<SolveOutcome> {
    let set = &problem.settings;
    let wire = init.wire().clone();
    if (wire.length() - problem.wire.length()).abs() > 1e-12 * wire.length() {
        return Err(SolveError::Invalid("crescent is attached to a different wire".into()));
    }
    let ctol = set.constraint_tol * wire.length();
    if init.boundary_length() > problem.budget() + ctol {
        return Err(SolveError::Invalid(format!(
            "initial crescent exceeds the thread budget by {:.3e}",
            init.boundary_length() - problem.budget()
        )));
    }
    if let Some(t) = init.first_flipped() {
        return Err(SolveError::Tangled { iteration: 0, triangle: t });
    }
    let start = perturbed(init, set)?;
    let mesh = start.mesh().clone();
    let (rings, sectors) = (mesh.rings(), mesh.sectors());
    let lower: Vec<usize> = (0..=sectors / 2).map(|k| start.lower_vertex(k)).collect();
    let upper: Vec<usize> = (1..sectors / 2).map(|j| mesh.vertex(rings, j)).collect();
    let thread = start.thread_vertices();
    let (_, kmax) = wire.curvature_max();
    let mut mu = 1.0 / kmax;
    let mut rho = set.penalty.unwrap_or(1.0 / (kmax * problem.lambda));

    let layout = Layout { wire: &wire, tris: mesh.triangles(), lower: &lower, upper: &upper, thread: &thread, lambda: problem.lambda, fix_ends: set.fix_ends };
    let mut z: Vec<f64> = start.attachment().to_vec();
    for &v in &upper {
        z.extend(start.positions()[v].iter());
    }
    let mut pos = start.positions().to_vec();
    let mut metric = start.metric().to_vec();
    let mut area_history = Vec::new();
    let mut constraint_history = Vec::new();
    let mut step_history = Vec::new();
    let mut total = 0;
    let mut prev_area = f64::INFINITY;
    let mut prev_violation = f64::INFINITY;
    let mut converged = false;
    let mut outer = 0;
    let mut idle = 0;
    let h = start.thread_length() / (sectors / 2) as f64;
    let mut scratch = Vec::new();
    let quality_floor = QUALITY_FLOOR * metric.iter().map(RefTriangle::quality).fold(f64::INFINITY, f64::min);
    while total < set.max_iterations {
        outer += 1;
        // move the metric toward the current surface, as far as the
        // re-solved interior stays unfolded
        let target = metric_of(mesh.triangles(), &pos);
        let mut chosen = None;
        for k in 0..=METRIC_HALVINGS {
            let beta = if k == METRIC_HALVINGS { 0.0 } else { 0.5f64.powi(k as i32) };
            let trial: Vec<RefTriangle> = metric.iter().zip(&target).map(|(m, t)| m.lerp(t, beta)).collect();
            if beta > 0.0 && trial.iter().any(|m| !(m.quality() >= quality_floor)) {
                continue;
            }
            let Ok(stiff) = Stiffness::new(&mesh, &trial) else { continue };
            let obj = layout.objective(&stiff, &trial, &pos, mu, rho);
            if obj.eval(&z, &mut scratch).is_some() {
                chosen = Some((trial, stiff));
                break;
            }
        }
        let Some((trial, stiff)) = chosen else {
            let t = first_flipped(mesh.triangles(), &metric, &pos).unwrap_or(0);
            return Err(SolveError::Tangled { iteration: outer, triangle: t });
        };
        metric = trial;
        let obj = layout.objective(&stiff, &metric, &pos, mu, rho);
        let iters = set.inner_iterations.min(set.max_iterations - total).max(1);
        let (znew, eval, steps) = match lbfgs(&obj, z.clone(), iters, set.memory, 0.05 * h) {
            Some(r) => r,
            None => {
                let t = first_flipped(mesh.triangles(), &metric, &pos).unwrap_or(0);
                return Err(SolveError::Tangled { iteration: outer, triangle: t });
            }
        };
        total += steps.max(1);
        if let Some(t) = first_flipped(mesh.triangles(), &metric, &eval.positions) {
            return Err(SolveError::Tangled { iteration: outer, triangle: t });
        }
        z = znew;
        pos = eval.positions;
        let current = CrescentMesh::with_metric(mesh.clone(), wire.clone(), pos.clone(), metric.clone(), z[..lower.len()].to_vec())?;
        let area = current.area();
        let g = eval.constraint;
        area_history.push(area);
        constraint_history.push(g);
        step_history.push(steps);
        let violation = g.max(-mu / (2.0 * rho));
        mu = (mu + 2.0 * rho * g).max(0.0);
        if violation.abs() > ctol && violation.abs() > 0.25 * prev_violation.abs() {
            rho = (2.0 * rho).min(1e12);
        }
        let stalled = (prev_area - area).abs() <= set.energy_tol * area * steps.max(1) as f64;
        if (stalled || steps == 0) && violation.abs() <= ctol && g.abs() <= ctol {
            converged = true;
            break;
        }
        idle = if steps == 0 { idle + 1 } else { 0 };
        if idle >= MAX_IDLE {
            break;
        }
        prev_area = area;
        prev_violation = violation;
    }
    let multiplier = kkt_multiplier(mesh.triangles(), &thread, &pos).unwrap_or(mu);
    let crescent = CrescentMesh::with_metric(mesh.clone(), wire.clone(), pos, metric, z[..lower.len()].to_vec())?;
    let chart = TubularChart::new(wire.clone(), 0.9)?;
    let mut report = verify_all(&crescent, &chart, problem.lambda, set.slack)?;
    report.kappa_multiplier = (multiplier > 0.0).then(|| 1.0 / multiplier);
    report.iterations = total;
    report.converged = converged;
    Ok(SolveOutcome { crescent, report, multiplier, penalty: rho, area_history, constraint_history, step_history })
}
