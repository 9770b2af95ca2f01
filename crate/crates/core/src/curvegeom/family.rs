use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::Vec3;

/// A curve given by a closed-form parametrization `c(t)` together with its
/// first four derivatives in `t`. The parameter need not be arclength.
pub trait Parametric {
    /// `[c, c', c'', c''', c'''']` at `t`.
    fn jet(&self, t: f64) -> [Vec3; 5];
    /// Parameter interval.
    fn domain(&self) -> (f64, f64);
    fn is_closed(&self) -> bool;
}

/// Built-in analytic wire families.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveFamily {
    /// `r (cos(t+phase), sin(t+phase), 0)`.
    Circle { radius: f64, phase: f64 },
    /// `(a cos u, b sin u, 0)` with `u = t + phase`.
    Ellipse { a: f64, b: f64, phase: f64 },
    /// `(a cos u, b sin u, c sin 2u)` with `u = t + phase`; a nonplanar closed curve.
    Saddle { a: f64, b: f64, c: f64, phase: f64 },
    /// `(r cos t, r sin t, rise t)` for `t` in `[0, 2 pi turns]`.
    Helix { radius: f64, rise: f64, turns: f64 },
    /// Straight segment along the x axis.
    Segment { length: f64 },
}

impl CurveFamily {
    /// Ellipse with its two curvature maxima placed away from the parameter seam.
    pub fn ellipse(a: f64, b: f64) -> Self {
        CurveFamily::Ellipse { a, b, phase: FRAC_PI_2 }
    }

    pub fn circle(radius: f64) -> Self {
        CurveFamily::Circle { radius, phase: 0.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CurveFamily::Circle { .. } => "circle",
            CurveFamily::Ellipse { .. } => "ellipse",
            CurveFamily::Saddle { .. } => "saddle",
            CurveFamily::Helix { .. } => "helix",
            CurveFamily::Segment { .. } => "segment",
        }
    }
}

/// `d^k/du^k cos(u)` and `d^k/du^k sin(u)`.
fn trig_derivs(u: f64) -> ([f64; 5], [f64; 5]) {
    let mut c = [0.0; 5];
    let mut s = [0.0; 5];
    for (k, (ck, sk)) in c.iter_mut().zip(s.iter_mut()).enumerate() {
        let shift = k as f64 * FRAC_PI_2;
        *ck = (u + shift).cos();
        *sk = (u + shift).sin();
    }
    (c, s)
}

impl Parametric for CurveFamily {
    fn jet(&self, t: f64) -> [Vec3; 5] {
        let mut out = [Vec3::zeros(); 5];
        match *self {
            CurveFamily::Circle { radius, phase } => {
                let (c, s) = trig_derivs(t + phase);
                for k in 0..5 {
                    out[k] = Vec3::new(radius * c[k], radius * s[k], 0.0);
                }
            }
            CurveFamily::Ellipse { a, b, phase } => {
                let (c, s) = trig_derivs(t + phase);
                for k in 0..5 {
                    out[k] = Vec3::new(a * c[k], b * s[k], 0.0);
                }
            }
            CurveFamily::Saddle { a, b, c: h, phase } => {
                let u = t + phase;
                let (c, s) = trig_derivs(u);
                let (_, s2) = trig_derivs(2.0 * u);
                for k in 0..5 {
                    let z = h * 2f64.powi(k as i32) * s2[k];
                    out[k] = Vec3::new(a * c[k], b * s[k], z);
                }
            }
            CurveFamily::Helix { radius, rise, .. } => {
                let (c, s) = trig_derivs(t);
                for k in 0..5 {
                    out[k] = Vec3::new(radius * c[k], radius * s[k], 0.0);
                }
                out[0].z = rise * t;
                out[1].z = rise;
            }
            CurveFamily::Segment { .. } => {
                out[0] = Vec3::new(t, 0.0, 0.0);
                out[1] = Vec3::new(1.0, 0.0, 0.0);
            }
        }
        out
    }

    fn domain(&self) -> (f64, f64) {
        match *self {
            CurveFamily::Circle { .. }
            | CurveFamily::Ellipse { .. }
            | CurveFamily::Saddle { .. } => (0.0, TAU),
            CurveFamily::Helix { turns, .. } => (0.0, 2.0 * PI * turns),
            CurveFamily::Segment { length } => (0.0, length),
        }
    }

    fn is_closed(&self) -> bool {
        matches!(
            self,
            CurveFamily::Circle { .. } | CurveFamily::Ellipse { .. } | CurveFamily::Saddle { .. }
        )
    }
}

/// Derivatives of `c(t(s))` with respect to arclength, from the parametric
/// jet, by Faa di Bruno with `t'(s) = 1/|c'(t)|`.
pub(crate) fn arclength_jet(j: &[Vec3; 5]) -> [Vec3; 4] {
    let [_, c1, c2, c3, c4] = *j;
    let v = c1.norm();
    let v1 = c1.dot(&c2) / v;
    let n = c2.dot(&c2) + c1.dot(&c3) - v1 * v1;
    let v2 = n / v;
    let n_t = 3.0 * c2.dot(&c3) + c1.dot(&c4) - 2.0 * v1 * v2;
    let v3 = (n_t - v2 * v1) / v;

    let t1 = 1.0 / v;
    let t2 = -v1 / v.powi(3);
    let t3 = -v2 / v.powi(4) + 3.0 * v1 * v1 / v.powi(5);
    let t4 = -v3 / v.powi(5) + 10.0 * v1 * v2 / v.powi(6) - 15.0 * v1.powi(3) / v.powi(7);

    [
        c1 * t1,
        c2 * (t1 * t1) + c1 * t2,
        c3 * t1.powi(3) + c2 * (3.0 * t1 * t2) + c1 * t3,
        c4 * t1.powi(4)
            + c3 * (6.0 * t1 * t1 * t2)
            + c2 * (3.0 * t2 * t2 + 4.0 * t1 * t3)
            + c1 * t4,
    ]
}
