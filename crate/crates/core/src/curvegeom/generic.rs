use super::wire::WireCurve;
use crate::Vec3;

/// Per-condition outcome of the genericity test.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericityVerdict {
    pub c4: bool,
    pub curvature_nonvanishing: bool,
    pub curvature_morse: bool,
    pub torsion_transverse: bool,
    pub torsion_nonzero_at_critical: bool,
    /// Zero sites of κ' (samples or bracketed sign changes).
    pub curvature_critical_points: usize,
    pub torsion_zeros: usize,
}

impl GenericityVerdict {
    pub fn generic(&self) -> bool {
        self.c4 && self.curvature_nonvanishing && self.curvature_morse && self.torsion_transverse && self.torsion_nonzero_at_critical
    }
}

const REL_TOL: f64 = 1e-6;

struct Profile {
    kappa: Vec<f64>,
    dkappa: Vec<f64>,
    ddkappa: Vec<f64>,
    torsion: Vec<f64>,
    dtorsion: Vec<f64>,
}

fn det(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    a.cross(b).dot(c)
}

fn profile(wire: &WireCurve) -> Profile {
    let n = wire.sample_count();
    let mut p = Profile { kappa: vec![0.0; n], dkappa: vec![0.0; n], ddkappa: vec![0.0; n], torsion: vec![0.0; n], dtorsion: vec![0.0; n] };
    for k in 0..n {
        let [d1, d2, d3, d4] = wire.samples()[k].d;
        let kap = d2.norm();
        p.kappa[k] = kap;
        if kap < 1e-300 {
            continue;
        }
        let dk = d2.dot(&d3) / kap;
        p.dkappa[k] = dk;
        p.ddkappa[k] = (d3.norm_squared() + d2.dot(&d4) - dk * dk) / kap;
        let tn = det(&d1, &d2, &d3);
        p.torsion[k] = tn / (kap * kap);
        p.dtorsion[k] = det(&d1, &d2, &d4) / (kap * kap) - 2.0 * tn * dk / kap.powi(3);
    }
    p
}

/// Zero sites of `q` as fractional sample positions: samples with `|q| <= tol`
/// and linear-interpolated sign changes between neighbors.
fn zero_sites(q: &[f64], tol: f64, cyclic: bool) -> Vec<f64> {
    let n = q.len();
    let mut out = Vec::new();
    for k in 0..n {
        if q[k].abs() <= tol {
            out.push(k as f64);
        }
    }
    let pairs = if cyclic { n } else { n - 1 };
    for k in 0..pairs {
        let j = (k + 1) % n;
        if q[k].abs() > tol && q[j].abs() > tol && q[k] * q[j] < 0.0 {
            out.push(k as f64 + q[k] / (q[k] - q[j]));
        }
    }
    out
}

fn interp(q: &[f64], site: f64) -> f64 {
    let n = q.len();
    let k = site.floor() as usize % n;
    let f = site - site.floor();
    q[k] * (1.0 - f) + q[(k + 1) % n] * f
}

fn tolerance(q: &[f64], floor: f64) -> f64 {
    let max = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    REL_TOL * max.max(floor)
}

/// Evaluates the five genericity conditions on the sample grid.
pub fn genericity_check(wire: &WireCurve) -> GenericityVerdict {
    let p = profile(wire);
    let cyclic = wire.is_closed();
    let len = wire.length();
    let kref = p.kappa.iter().fold(0.0f64, |m, v| m.max(*v)).max(1.0 / len);

    let c4 = wire.samples().iter().all(|s| s.d.iter().all(|v| v.iter().all(|x| x.is_finite())));

    let tol_k = tolerance(&p.kappa, kref);
    let curvature_nonvanishing = p.kappa.iter().all(|k| *k > tol_k);

    // the floors keep identically-zero quantities from self-normalizing
    let tol_dk = tolerance(&p.dkappa, kref / len);
    let tol_ddk = tolerance(&p.ddkappa, kref / (len * len));
    let crit = zero_sites(&p.dkappa, tol_dk, cyclic);
    let curvature_morse = crit.iter().all(|&s| interp(&p.ddkappa, s).abs() > tol_ddk);

    let tol_t = tolerance(&p.torsion, 1.0 / len);
    let tol_dt = tolerance(&p.dtorsion, 1.0 / (len * len));
    let tz = zero_sites(&p.torsion, tol_t, cyclic);
    let torsion_transverse = tz.iter().all(|&s| interp(&p.dtorsion, s).abs() > tol_dt);
    let torsion_nonzero_at_critical = crit.iter().all(|&s| interp(&p.torsion, s).abs() > tol_t);

    GenericityVerdict {
        c4,
        curvature_nonvanishing,
        curvature_morse,
        torsion_transverse,
        torsion_nonzero_at_critical,
        curvature_critical_points: crit.len(),
        torsion_zeros: tz.len(),
    }
}
