use super::fd::five_point_weights;
use super::wire::{WireCurve, UNIT_SPEED_TOL};
use super::CurveError;
use crate::Vec3;

/// A rotation-minimizing orthonormal normal frame along a wire, one pair per
/// sample, with `E_i' = -<E_i, Γ''> Γ'`.
#[derive(Debug, Clone)]
pub struct ParallelFrame {
    e1: Vec<Vec3>,
    e2: Vec<Vec3>,
}

fn transport_rhs(e: &Vec3, d1: &Vec3, d2: &Vec3) -> Vec3 {
    -d1 * e.dot(d2)
}

/// One RK4 step of the frame ODE from `s` to `s + h` using Taylor data of the wire.
fn rk4_step(wire: &WireCurve, s: f64, h: f64, e: &Vec3) -> Vec3 {
    let j0 = wire.eval(s);
    let jm = wire.eval(s + 0.5 * h);
    let j1 = wire.eval(s + h);
    let k1 = transport_rhs(e, &j0.d1, &j0.d2);
    let k2 = transport_rhs(&(e + k1 * (0.5 * h)), &jm.d1, &jm.d2);
    let k3 = transport_rhs(&(e + k2 * (0.5 * h)), &jm.d1, &jm.d2);
    let k4 = transport_rhs(&(e + k3 * h), &j1.d1, &j1.d2);
    e + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Re-orthonormalize `(e1, e2)` against the unit tangent, keeping `e1` as
/// the leading vector and the handedness `sign = <e2, t × e1>`.
fn orthonormalize(t: &Vec3, e1: &Vec3, sign: f64) -> (Vec3, Vec3) {
    let a = (e1 - t * e1.dot(t)).normalize();
    (a, t.cross(&a) * sign)
}

/// Parallel-transports the seed pair along the wire from `s = 0`.
pub fn parallel_frame(wire: &WireCurve, seed: (Vec3, Vec3)) -> Result<ParallelFrame, CurveError> {
    let samples = wire.samples();
    if let Some(bad) = samples.iter().find(|s| (s.d[0].norm() - 1.0).abs() > UNIT_SPEED_TOL) {
        return Err(CurveError::NotArclength { s: bad.s, speed: bad.d[0].norm() });
    }
    let t0 = samples[0].d[0];
    let (a, b) = seed;
    let defect = [(a.norm() - 1.0).abs(), (b.norm() - 1.0).abs(), a.dot(&b).abs(), a.dot(&t0).abs(), b.dot(&t0).abs()]
        .into_iter()
        .fold(0.0, f64::max);
    if !(defect <= 1e-9) {
        return Err(CurveError::BadSeed(defect));
    }
    let sign = b.dot(&t0.cross(&a)).signum();

    let n = samples.len();
    let mut e1 = Vec::with_capacity(n);
    let mut e2 = Vec::with_capacity(n);
    e1.push(a);
    e2.push(b);
    let mut cur = a;
    for k in 1..n {
        let s = samples[k - 1].s;
        let h = samples[k].s - s;
        cur = rk4_step(wire, s, h, &cur);
        let (p, q) = orthonormalize(&samples[k].d[0], &cur, sign);
        cur = p;
        e1.push(p);
        e2.push(q);
    }
    Ok(ParallelFrame { e1, e2 })
}

impl ParallelFrame {
    pub fn e1(&self) -> &[Vec3] {
        &self.e1
    }

    pub fn e2(&self) -> &[Vec3] {
        &self.e2
    }

    /// Frame at arbitrary `s` by a single RK4 step from the nearest sample.
    pub fn at(&self, wire: &WireCurve, s: f64) -> (Vec3, Vec3) {
        let s = if wire.is_closed() { wire.wrap(s) } else { s.clamp(0.0, wire.length()) };
        let k = wire.nearest_index(s);
        let smp = &wire.samples()[k];
        let h = s - smp.s;
        if h == 0.0 {
            return (self.e1[k], self.e2[k]);
        }
        let sign = self.e2[k].dot(&smp.d[0].cross(&self.e1[k])).signum();
        let e = rk4_step(wire, smp.s, h, &self.e1[k]);
        orthonormalize(&wire.eval(s).d1, &e, sign)
    }

    /// Max of `|E_i' + <E_i, Γ''> Γ'|` with `E_i'` from five-point differences.
    pub fn ode_residual(&self, wire: &WireCurve) -> f64 {
        let samples = wire.samples();
        let n = samples.len();
        if n < 5 {
            return 0.0;
        }
        let w = five_point_weights();
        let h = wire.spacing();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let start = k.saturating_sub(2).min(n - 5);
            let c = k - start;
            for field in [&self.e1, &self.e2] {
                let mut de = Vec3::zeros();
                for j in 0..5 {
                    de += field[start + j] * w[c][1][j];
                }
                de /= h;
                let smp = &samples[k];
                let r = de + smp.d[0] * field[k].dot(&smp.d[1]);
                worst = worst.max(r.norm());
            }
        }
        worst
    }

    /// Max orthonormality defect over all samples.
    pub fn orthonormality_defect(&self, wire: &WireCurve) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, smp) in wire.samples().iter().enumerate() {
            let (a, b) = (self.e1[k], self.e2[k]);
            for v in [(a.norm() - 1.0).abs(), (b.norm() - 1.0).abs(), a.dot(&b).abs(), a.dot(&smp.d[0]).abs(), b.dot(&smp.d[0]).abs()] {
                worst = worst.max(v);
            }
        }
        worst
    }
}

/// A seed pair at `s = 0`: the principal normal and binormal when the
/// curvature is nonzero, otherwise any normal pair.
pub(crate) fn default_seed(wire: &WireCurve) -> (Vec3, Vec3) {
    let smp = &wire.samples()[0];
    let t = smp.d[0];
    let n = smp.d[1] - t * smp.d[1].dot(&t);
    let e1 = if n.norm() > 1e-8 {
        n.normalize()
    } else {
        let trial = if t.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        (trial - t * trial.dot(&t)).normalize()
    };
    (e1, t.cross(&e1))
}
