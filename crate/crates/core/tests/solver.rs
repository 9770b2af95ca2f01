use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;
use threadwire::curvegeom::{CurveFamily, TubularChart, WireCurve};
use threadwire::harmlevel::{BoundaryArc, DiscMesh};
use threadwire::solver::*;
use threadwire::Vec3;

fn ellipse() -> Arc<WireCurve> {
    Arc::new(WireCurve::from_parametric(&CurveFamily::ellipse(2.0, 1.0), 4001).unwrap())
}

fn solve(wire: Arc<WireCurve>, lambda: f64, rings: usize, sectors: usize, settings: SolverSettings) -> (CrescentMesh, SolveOutcome) {
    let p0 = build_competitor_p0(wire.clone(), lambda, WidthRule::Admissible, rings, sectors).unwrap();
    solve_from(p0, lambda, settings)
}

fn solve_from(p0: CrescentMesh, lambda: f64, settings: SolverSettings) -> (CrescentMesh, SolveOutcome) {
    let wire = p0.wire().clone();
    let problem = ThreadProblem::new(wire, lambda, settings).unwrap();
    let out = minimize(&problem, &p0).unwrap();
    (p0, out)
}

/// Planar reference: the thread is a circular arc of length `S(φ) - λ` over
/// the chord cutting the ellipse `(2cos u, sin u)` at `u = ±φ`. The thread
/// may not leave the region bounded by the wire, so its end angle `θ` is at
/// most the wire's angle `atan(2 tan φ)` to the chord; the area between wire
/// and thread is minimized over feasible `φ`.
struct DidoEllipse {
    area: f64,
    kappa: f64,
}

fn ellipse_arclength(phi: f64) -> f64 {
    let n = 4000;
    let h = phi / n as f64;
    let f = |u: f64| (4.0 * u.sin().powi(2) + u.cos().powi(2)).sqrt();
    let mut acc = f(0.0) + f(phi);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * acc * h / 3.0
}

/// Half-angle `θ` of a circular arc of length `len` over chord `c`.
fn arc_half_angle(c: f64, len: f64) -> f64 {
    let (mut lo, mut hi) = (1e-12, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.sin() / mid > c / len {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn dido_ellipse(lambda: f64) -> DidoEllipse {
    // (area, curvature, end-angle slack)
    let eval = |phi: f64| {
        let len = ellipse_arclength(phi) - lambda;
        let c = 2.0 * phi.sin();
        if len <= c {
            return None;
        }
        let th = arc_half_angle(c, len);
        let r = len / (2.0 * th);
        let cap = 2.0 * phi - (2.0 * phi).sin();
        let seg = r * r * (2.0 * th - (2.0 * th).sin()) / 2.0;
        Some((cap - seg, 1.0 / r, (2.0 * phi.tan()).atan() - th))
    };
    let mut lo = 1e-3;
    while eval(lo).is_none() {
        lo *= 1.01;
    }
    let (mut a, mut b) = (lo, 1.2);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if eval(mid).unwrap().2 >= 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let f = |p: f64| eval(p).unwrap().0;
    let (mut a, mut b) = (lo, a);
    for _ in 0..200 {
        let (m1, m2) = (a + (b - a) / 3.0, b - (b - a) / 3.0);
        if f(m1) < f(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let (area, kappa, _) = eval(0.5 * (a + b)).unwrap();
    DidoEllipse { area, kappa }
}

#[test]
fn dido_oracle_small_deficit_limit() {
    // A ≈ λ/κ_max to leading order
    let d = dido_ellipse(1e-4);
    assert!((d.area / 1e-4 - 0.5).abs() < 0.05, "{}", d.area / 1e-4);
}

#[test]
fn ellipse_solve_matches_planar_oracle() {
    let (p0, out) = solve(ellipse(), 0.05, 32, 64, SolverSettings::default());
    let r = &out.report;
    let oracle = dido_ellipse(0.05);
    assert!(r.converged);
    assert!((r.area - oracle.area).abs() < 0.03 * oracle.area, "{} vs {}", r.area, oracle.area);
    assert!((r.kappa - oracle.kappa).abs() < 0.1 * oracle.kappa, "{} vs {}", r.kappa, oracle.kappa);
    assert!(r.energy <= evaluate(&p0).unwrap().energy + 1e-12);
    let ell = ellipse().length();
    assert!((r.boundary_length - (ell - 0.05)).abs() <= 1e-6 * ell);
    assert!(r.energy >= r.area - 1e-15);
    assert_eq!(r.hull_ok, Some(true));
    assert_eq!(r.kappa_ok, Some(true));
    assert_eq!(r.slicewise_ok, Some(true));
    let att = out.crescent.attachment();
    assert!(att.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn lifted_planar_start_returns_to_the_plane() {
    // a wider lens leaves room in the budget for the lift
    let p0 = build_competitor_p0(ellipse(), 0.08, WidthRule::Admissible, 16, 32).unwrap();
    let mesh = p0.mesh().clone();
    let mut pos = p0.positions().to_vec();
    for (v, p) in pos.iter_mut().enumerate() {
        if mesh.arc(v) != Some(BoundaryArc::Lower) {
            let [x, y] = mesh.uv()[v];
            p.z = 0.03 * (1.0 - x * x) * (1.0 + y);
        }
    }
    let lifted = p0.with_positions(pos, p0.attachment().to_vec()).unwrap();
    let (_, out) = solve_from(lifted, 0.05, SolverSettings::default());
    let max_z = out.crescent.positions().iter().map(|p| p.z.abs()).fold(0.0, f64::max);
    assert!(max_z <= 1e-3 * 4.0, "out of plane by {max_z}");
    assert!(out.report.converged);
}

#[test]
fn circle_with_fixed_ends_gives_circular_arc() {
    let wire = Arc::new(WireCurve::from_parametric(&CurveFamily::circle(1.0), 4001).unwrap());
    let lambda = 0.04;
    let p0 = build_competitor_p0(wire.clone(), lambda, WidthRule::Fixed(0.6), 16, 64).unwrap();
    let settings = SolverSettings { fix_ends: true, ..SolverSettings::default() };
    let (p0, out) = solve_from(p0, lambda, settings);
    let (a, b) = p0.wire_segment();
    let (a1, b1) = out.crescent.wire_segment();
    assert!((a - a1).abs() < 1e-12 && (b - b1).abs() < 1e-12);
    let chord = (wire.point(b) - wire.point(a)).norm();
    let len = (b - a) - lambda;
    let th = arc_half_angle(chord, len);
    let expect = 2.0 * th / len;
    let got = extract_kappa(&out.crescent).unwrap();
    assert!((got.kappa - expect).abs() < 0.02 * expect, "{} vs {expect}", got.kappa);
    let mult = out.report.kappa_multiplier.unwrap();
    assert!((mult - expect).abs() < 0.02 * expect, "multiplier {mult} vs {expect}");
}

fn strip_crescent(radius: f64, thread: impl Fn(f64) -> Vec3, rings: usize, sectors: usize) -> CrescentMesh {
    // lower arc on a circle around its top point, upper arc given, interior blended
    let wire = Arc::new(WireCurve::from_parametric(&CurveFamily::circle(radius), 8001).unwrap());
    let mesh = Arc::new(DiscMesh::new(rings, sectors).unwrap());
    let s0 = radius * PI / 2.0;
    let pos: Vec<Vec3> = (0..mesh.vertex_count())
        .map(|v| {
            let [xi, eta] = mesh.uv()[v];
            let lo = wire.point(s0 + xi);
            match mesh.arc(v) {
                Some(BoundaryArc::Lower) => lo,
                Some(BoundaryArc::Upper) => thread(xi),
                None => {
                    let c = (1.0 - xi * xi).sqrt();
                    let t = (eta + c) / (2.0 * c);
                    lo * (1.0 - t) + thread(xi) * t
                }
            }
        })
        .collect();
    let attach = (0..=sectors / 2).map(|k| s0 + mesh.uv()[mesh.vertex(rings, sectors / 2 + k)][0]).collect();
    CrescentMesh::new(mesh, wire, pos.clone(), pos, attach).unwrap()
}

#[test]
fn kappa_of_straight_thread_is_zero() {
    let c = build_competitor_p0(ellipse(), 0.02, WidthRule::Admissible, 8, 64).unwrap();
    let k = extract_kappa(&c).unwrap();
    assert!(k.kappa.abs() < 1e-9 && k.spread == 0.0);
}

#[test]
fn kappa_of_circular_arc_thread() {
    // unit-circle wire around (0, 1) with corners at angle ±1 rad; the thread is a
    // radius-2 arc bulging toward the wire, so it bends away from the surface
    let rho = 2.0;
    let half = 1f64.sin();
    let base = 1f64.cos();
    let depth = (rho * rho - half * half).sqrt();
    let a0 = (half / rho).asin();
    let arc = move |xi: f64, up: f64| {
        let a = PI / 2.0 + a0 * xi;
        Vec3::new(0.0, base - up * depth, 0.0) + rho * Vec3::new(a.cos(), up * a.sin(), 0.0)
    };
    let c = strip_crescent(1.0, move |xi| arc(xi, 1.0), 8, 128);
    assert_eq!(c.thread_vertices().len(), 65);
    let k = extract_kappa(&c).unwrap();
    assert!((k.kappa - 1.0 / rho).abs() < 0.02 / rho, "{}", k.kappa);
    assert!(k.spread < 1e-6 && k.alignment < 1e-6, "{k:?}");
    // mirrored through the chord it bends toward the surface
    let m = extract_kappa(&strip_crescent(1.0, move |xi| arc(xi, -1.0), 8, 128)).unwrap();
    assert!((m.kappa + 1.0 / rho).abs() < 0.02 / rho, "{}", m.kappa);
}

#[test]
fn enclosure_of_flat_and_bumped_crescents() {
    let chart = TubularChart::new(Arc::new(WireCurve::from_parametric(&CurveFamily::circle(10.0), 8001).unwrap()), 0.9).unwrap();
    let flat = build_competitor_p0(chart.wire().clone(), 0.0, WidthRule::Fixed(1.0), 8, 32).unwrap();
    let e = enclosure_probe(&flat, &chart).unwrap();
    assert!((e.r2 - e.r1).abs() < 1e-9 * e.r1, "{e:?}");
    assert!((e.alpha - flat.energy()).abs() < 1e-15);

    let h = 0.3;
    let mut pos = flat.positions().to_vec();
    let mesh = flat.mesh().clone();
    for (v, p) in pos.iter_mut().enumerate() {
        if !mesh.is_boundary(v) {
            let [x, y] = mesh.uv()[v];
            p.z = h * (1.0 - x * x - y * y);
        }
    }
    let bumped = flat.with_positions(pos.clone(), flat.attachment().to_vec()).unwrap();
    let e = enclosure_probe(&bumped, &chart).unwrap();
    let exact = pos
        .iter()
        .map(|p| {
            let d = (p.x * p.x + p.y * p.y).sqrt() - 10.0;
            (d * d + p.z * p.z).sqrt()
        })
        .fold(0.0, f64::max);
    assert!((e.r2 - exact).abs() < 1e-6, "{} vs {exact}", e.r2);
    assert!(e.r2 > e.r1);
}

#[test]
fn negative_controls_fail_their_checks() {
    let wire = ellipse();
    let (_, out) = solve(wire.clone(), 0.05, 12, 32, SolverSettings::default());
    let good = out.crescent;
    let chart = TubularChart::new(wire, 0.9).unwrap();
    assert!(verify_convex_hull(&good).holds);
    assert!(verify_slicewise(&good, &chart, 50).unwrap().holds);
    assert!(extract_kappa(&good).unwrap().kappa > 0.0);

    // a vertex pushed off the plane leaves the hull
    let mut pos = good.positions().to_vec();
    let v = good.mesh().vertex(good.mesh().rings() / 2, good.mesh().sectors() / 4);
    pos[v].z += 0.01;
    let pushed = good.with_positions(pos, good.attachment().to_vec()).unwrap();
    let hull = verify_convex_hull(&pushed);
    assert!(!hull.holds && hull.margin > 0.009);

    // the thread mirrored through its chord bends the wrong way
    let (a, b) = (good.positions()[good.lower_vertex(0)], good.positions()[good.lower_vertex(good.attachment().len() - 1)]);
    let axis = (b - a).normalize();
    let mut pos = good.positions().to_vec();
    let mesh = good.mesh().clone();
    for (v, p) in pos.iter_mut().enumerate() {
        if mesh.arc(v) != Some(BoundaryArc::Lower) {
            let d = *p - a;
            let along = axis * d.dot(&axis);
            *p = a + along - (d - along);
        }
    }
    // the mirrored surface covers the other side of the chord; re-attach its interior
    let mut mirrored = good.with_positions(pos, good.attachment().to_vec()).unwrap();
    mirrored.harmonic_replace().unwrap();
    assert!(extract_kappa(&mirrored).unwrap().kappa < -1e-3);

    // swapping two upper vertices folds a slice
    let mut pos = good.positions().to_vec();
    let s = mesh.sectors();
    let (u, w) = (mesh.vertex(mesh.rings(), s / 8), mesh.vertex(mesh.rings(), 3 * s / 8));
    pos.swap(u, w);
    let swapped = good.with_positions(pos, good.attachment().to_vec()).unwrap();
    assert!(!verify_slicewise(&swapped, &chart, 50).unwrap().holds);
}

#[test]
fn tangled_start_is_rejected() {
    let wire = ellipse();
    let p0 = build_competitor_p0(wire.clone(), 0.05, WidthRule::Admissible, 8, 32).unwrap();
    let mut pos = p0.positions().to_vec();
    let mesh = p0.mesh().clone();
    let v = mesh.vertex(4, 8);
    pos[v] = pos[mesh.vertex(4, 24)];
    let bad = p0.with_positions(pos, p0.attachment().to_vec()).unwrap();
    let problem = ThreadProblem::new(wire, 0.05, SolverSettings::default()).unwrap();
    assert!(matches!(minimize(&problem, &bad), Err(SolveError::Tangled { .. })));
}

#[test]
fn budget_outside_admissible_range_is_rejected() {
    let seg = Arc::new(WireCurve::from_parametric(&CurveFamily::Segment { length: 1.0 }, 101).unwrap());
    assert!(matches!(ThreadProblem::new(seg, 0.5, SolverSettings::default()), Err(SolveError::BadDeficit { .. })));
    assert!(ThreadProblem::new(ellipse(), 0.0, SolverSettings::default()).is_err());
}

#[test]
fn solver_is_deterministic() {
    let settings = SolverSettings { perturbation: 0.1, seed: 3, ..SolverSettings::default() };
    let (_, a) = solve(ellipse(), 0.05, 8, 32, settings.clone());
    let (_, b) = solve(ellipse(), 0.05, 8, 32, settings);
    assert_eq!(a.crescent.positions(), b.crescent.positions());
    assert_eq!(a.report, b.report);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn rigid_motion_moves_the_solution_rigidly(
        ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0, angle in 0.0f64..6.0,
        sx in -5.0f64..5.0, sy in -5.0f64..5.0, sz in -5.0f64..5.0,
    ) {
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::new(ax, ay, az)), angle);
        let shift = Vec3::new(sx, sy, sz);
        let base = ellipse();
        let moved = Arc::new(base.transformed(&rot, &shift));
        let (_, a) = solve(base, 0.05, 16, 64, SolverSettings::default());
        let (_, b) = solve(moved, 0.05, 16, 64, SolverSettings::default());
        let (ra, rb) = (&a.report, &b.report);
        prop_assert!(ra.converged && rb.converged);
        // rounding picks between stationary states that differ at the resolution
        // of the corner slivers, about 1% at this mesh
        prop_assert!((ra.energy - rb.energy).abs() <= 0.015 * ra.energy, "{} vs {}", ra.energy, rb.energy);
        prop_assert!((ra.area - rb.area).abs() <= 0.015 * ra.area, "{} vs {}", ra.area, rb.area);
        let (ka, kb) = (ra.kappa_multiplier.unwrap(), rb.kappa_multiplier.unwrap());
        prop_assert!((ka - kb).abs() <= 0.03 * ka, "{} vs {}", ka, kb);
        // the corners sit at tangential contacts, where the area barely depends on them
        let ((a0, a1), (b0, b1)) = (a.crescent.wire_segment(), b.crescent.wire_segment());
        prop_assert!(((a0 + a1) - (b0 + b1)).abs() / 2.0 <= 0.01, "midpoints {} vs {}", (a0 + a1) / 2.0, (b0 + b1) / 2.0);
        prop_assert!(((a1 - a0) - (b1 - b0)).abs() <= 0.03 * (a1 - a0), "lengths {} vs {}", a1 - a0, b1 - b0);
    }

    #[test]
    fn minimize_descends_and_keeps_invariants(lambda in 0.02f64..0.1, seed in 0u64..1000) {
        let settings = SolverSettings { perturbation: 0.05, seed, ..SolverSettings::default() };
        let (p0, out) = solve(ellipse(), lambda, 8, 32, settings);
        let r = &out.report;
        prop_assert!(r.energy <= evaluate(&p0).unwrap().energy * (1.0 + 1e-9));
        prop_assert!(r.energy >= r.area - 1e-15);
        prop_assert!(out.crescent.attachment().windows(2).all(|w| w[0] <= w[1]));
        let ell = ellipse().length();
        prop_assert!(r.boundary_length <= ell - lambda + 1e-6 * ell);
        if r.converged {
            prop_assert!((r.boundary_length - (ell - lambda)).abs() <= 1e-6 * ell);
            prop_assert!(r.kappa >= -1e-3);
        }
    }
}

