use std::f64::consts::TAU;
use std::sync::Arc;

use super::mesh::{assemble_interior, cotan_weights, DiscMesh};
use super::HarmError;

/// Relative tolerance under which `h - a` counts as zero.
pub(crate) const ZERO_TOL: f64 = 1e-9;

/// A scalar field on a disc mesh.
#[derive(Debug, Clone)]
pub struct DiscField {
    pub mesh: Arc<DiscMesh>,
    pub values: Vec<f64>,
}

impl DiscField {
    pub fn new(mesh: Arc<DiscMesh>, values: Vec<f64>) -> Result<Self, HarmError> {
        if values.len() != mesh.vertex_count() {
            return Err(HarmError::Invalid(format!("{} values for {} vertices", values.len(), mesh.vertex_count())));
        }
        Ok(DiscField { mesh, values })
    }

    /// Magnitude used to scale zero tolerances.
    pub fn scale(&self) -> f64 {
        let (lo, hi) = self.range();
        (hi - lo).max(hi.abs()).max(lo.abs()).max(f64::MIN_POSITIVE)
    }

    pub fn range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
    }

    pub fn boundary_range(&self) -> (f64, f64) {
        self.mesh
            .boundary()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(self.values[v]), hi.max(self.values[v])))
    }

    pub fn at(&self, p: [f64; 2]) -> Option<f64> {
        self.mesh.interpolate(&self.values, p)
    }

    /// Max |Σ w_ij (h_i - h_j)| over interior vertices, relative to the field scale.
    pub fn laplace_residual(&self) -> f64 {
        let w = match cotan_weights(self.mesh.triangles(), &self.mesh.flat_positions()) {
            Ok(w) => w,
            Err(_) => return f64::INFINITY,
        };
        let mut r = vec![0.0; self.values.len()];
        for ((a, b), wt) in w {
            let d = wt * (self.values[a] - self.values[b]);
            r[a] += d;
            r[b] -= d;
        }
        (0..r.len()).filter(|&v| !self.mesh.is_boundary(v)).map(|v| r[v].abs()).fold(0.0, f64::max) / self.scale()
    }
}

/// Harmonic extension of boundary data given as a function of the polar angle.
pub fn solve_harmonic(mesh: Arc<DiscMesh>, data: impl Fn(f64) -> f64) -> Result<DiscField, HarmError> {
    let vals: Vec<f64> = (0..mesh.sectors()).map(|j| data(TAU * j as f64 / mesh.sectors() as f64)).collect();
    solve_harmonic_values(mesh, &vals)
}

/// Harmonic extension of boundary values listed by sector.
pub fn solve_harmonic_values(mesh: Arc<DiscMesh>, boundary: &[f64]) -> Result<DiscField, HarmError> {
    if boundary.len() != mesh.sectors() {
        return Err(HarmError::Invalid(format!("{} boundary values for {} sectors", boundary.len(), mesh.sectors())));
    }
    if boundary.iter().any(|v| !v.is_finite()) {
        return Err(HarmError::Invalid("non-finite boundary value".into()));
    }
    let weights = cotan_weights(mesh.triangles(), &mesh.flat_positions())?;
    let (k, coupling) = assemble_interior(&mesh, &weights)?;
    let n_int = k.size();
    let chol = k.cholesky().map_err(|e| HarmError::Singular(e.to_string()))?;
    let mut values = vec![0.0; mesh.vertex_count()];
    for (j, &b) in boundary.iter().enumerate() {
        values[mesh.vertex(mesh.rings(), j)] = b;
    }
    let mut rhs = vec![0.0; n_int];
    for &(row, v, w) in &coupling {
        rhs[row] += w * values[v];
    }
    chol.solve_in_place(&mut rhs);
    // interior vertices come first in natural order
    values[..n_int].copy_from_slice(&rhs);
    let field = DiscField { mesh, values };
    let res = field.laplace_residual();
    if !(res <= 1e-10) {
        return Err(HarmError::Singular(format!("Laplace residual {res:.3e}")));
    }
    Ok(field)
}

/// Cyclic sign changes of `h - a` around the boundary, skipping isolated zeros.
pub fn sign_changes(field: &DiscField, a: f64) -> Result<usize, HarmError> {
    let tol = ZERO_TOL * field.scale();
    let ring: Vec<usize> = field.mesh.boundary();
    let n = ring.len();
    let signs: Vec<i8> = ring
        .iter()
        .map(|&v| {
            let d = field.values[v] - a;
            if d.abs() <= tol {
                0
            } else if d > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    for k in 0..n {
        if signs[k] == 0 && signs[(k + 1) % n] == 0 {
            let p = field.mesh.uv()[ring[k]];
            return Err(HarmError::Plateau { x: p[0], y: p[1] });
        }
    }
    let nonzero: Vec<i8> = signs.into_iter().filter(|s| *s != 0).collect();
    if nonzero.is_empty() {
        return Ok(0);
    }
    let m = nonzero.len();
    Ok((0..m).filter(|&k| nonzero[k] != nonzero[(k + 1) % m]).count())
}

/// Leading degree of `h - h(p)` at an interior point.
#[derive(Debug, Clone, PartialEq)]
pub struct VanishingOrder {
    /// Degree `k` of the leading homogeneous harmonic term.
    pub degree: usize,
    /// `m = k - 1`: derivatives vanish through order `m`.
    pub order: usize,
    /// Local level-set valence `2k`.
    pub valence: usize,
    /// Relative residual of the truncated Fourier fit on the ring.
    pub residual: f64,
    /// Fourier amplitudes `|c_j|`, `j = 0..`.
    pub amplitudes: Vec<f64>,
}

const FIT_DEGREE: usize = 12;
const RING_SAMPLES: usize = 96;

/// Estimates the leading degree of `h - h(p)` from a Fourier fit of `h` on a
/// small ring around `p`.
pub fn vanishing_order(field: &DiscField, p: [f64; 2]) -> Result<VanishingOrder, HarmError> {
    let dist = 1.0 - p[0].hypot(p[1]);
    let rho = 0.5 * dist;
    let cell = 1.0 / field.mesh.rings() as f64;
    if rho < 4.0 * cell {
        return Err(HarmError::NotInterior(p[0], p[1]));
    }
    let center = field.at(p).ok_or(HarmError::NotInterior(p[0], p[1]))?;
    let mut samples = Vec::with_capacity(RING_SAMPLES);
    for i in 0..RING_SAMPLES {
        let t = TAU * i as f64 / RING_SAMPLES as f64;
        let q = [p[0] + rho * t.cos(), p[1] + rho * t.sin()];
        samples.push(field.at(q).ok_or(HarmError::NotInterior(q[0], q[1]))? - center);
    }
    let n = RING_SAMPLES as f64;
    let mut amps = Vec::with_capacity(FIT_DEGREE + 1);
    let mut recon = vec![0.0; RING_SAMPLES];
    for j in 0..=FIT_DEGREE {
        let (mut a, mut b) = (0.0, 0.0);
        for (i, s) in samples.iter().enumerate() {
            let t = TAU * (j * i) as f64 / n;
            a += s * t.cos();
            b += s * t.sin();
        }
        let f = if j == 0 { 1.0 / n } else { 2.0 / n };
        let (a, b) = (a * f, b * f);
        for (i, r) in recon.iter_mut().enumerate() {
            let t = TAU * (j * i) as f64 / n;
            *r += a * t.cos() + b * t.sin();
        }
        amps.push(a.hypot(b));
    }
    let rms = (samples.iter().map(|s| s * s).sum::<f64>() / n).sqrt();
    let scale = field.scale();
    if rms <= 1e-12 * scale {
        return Err(HarmError::Ambiguous(f64::INFINITY));
    }
    let err = (samples.iter().zip(&recon).map(|(s, r)| (s - r) * (s - r)).sum::<f64>() / n).sqrt();
    let residual = err / rms;
    if residual > 0.05 {
        return Err(HarmError::Ambiguous(residual));
    }
    let peak = amps[1..].iter().cloned().fold(0.0, f64::max);
    let degree = (1..=FIT_DEGREE).find(|&j| amps[j] >= 1e-3 * peak).unwrap_or(FIT_DEGREE);
    Ok(VanishingOrder { degree, order: degree - 1, valence: 2 * degree, residual, amplitudes: amps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re_zk(k: i32) -> impl Fn(f64) -> f64 {
        move |t: f64| (k as f64 * t).cos()
    }

    #[test]
    fn linear_and_quadratic_data() {
        let mesh = Arc::new(DiscMesh::new(32, 64).unwrap());
        let f = solve_harmonic(mesh.clone(), re_zk(1)).unwrap();
        for (v, p) in mesh.uv().iter().enumerate() {
            assert!((f.values[v] - p[0]).abs() < 1e-3);
        }
        let f2 = solve_harmonic(mesh.clone(), re_zk(2)).unwrap();
        let err = mesh.uv().iter().enumerate().map(|(v, p)| (f2.values[v] - (p[0] * p[0] - p[1] * p[1])).abs()).fold(0.0, f64::max);
        assert!(err < 5e-3, "{err}");
        let c = solve_harmonic(mesh.clone(), |_| 0.7).unwrap();
        assert!(c.values.iter().all(|v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn maximum_principle() {
        let mesh = Arc::new(DiscMesh::new(16, 32).unwrap());
        let f = solve_harmonic(mesh, |t| (3.0 * t).sin() + 0.4 * t.cos()).unwrap();
        let (lo, hi) = f.boundary_range();
        assert!(f.values.iter().all(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12));
    }

    #[test]
    fn rado_counts() {
        let mesh = Arc::new(DiscMesh::new(16, 64).unwrap());
        for k in 1..=3 {
            let f = solve_harmonic(mesh.clone(), re_zk(k)).unwrap();
            assert_eq!(sign_changes(&f, 0.0).unwrap(), 2 * k as usize);
        }
        let c = solve_harmonic(mesh, |_| 1.0).unwrap();
        assert!(matches!(sign_changes(&c, 1.0), Err(HarmError::Plateau { .. })));
    }

    #[test]
    fn order_at_origin() {
        let mesh = Arc::new(DiscMesh::new(32, 64).unwrap());
        for k in 1..=3 {
            let f = solve_harmonic(mesh.clone(), re_zk(k)).unwrap();
            let o = vanishing_order(&f, [0.0, 0.0]).unwrap();
            assert_eq!(o.degree, k as usize);
            assert_eq!(o.valence, 2 * k as usize);
        }
        let f = solve_harmonic(mesh, re_zk(1)).unwrap();
        assert!(matches!(vanishing_order(&f, [0.95, 0.0]), Err(HarmError::NotInterior(..))));
    }
}
