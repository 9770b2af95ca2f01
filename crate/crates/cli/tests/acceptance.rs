//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use threadwire::curvegeom::{CurveFamily, TubularChart, WireCurve};
use threadwire::harmlevel::BoundaryArc;
use threadwire::solver::*;
use threadwire_cli::{CsvDoc, ExperimentConfig, Overrides};

const ELLIPSE: &str = "[wire]\nfamily = ellipse\na = 2\nb = 1\nsamples = 4001\n";

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

struct Harness {
    root: tempfile::TempDir,
    runs: usize,
}

/// Outcome of one config run through the library.
struct Run {
    dir: PathBuf,
    elapsed: Duration,
}

impl Run {
    fn doc(&self, name: &str) -> CsvDoc {
        let text = std::fs::read_to_string(self.dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        CsvDoc::parse(&text).unwrap_or_else(|| panic!("{name}: not a report"))
    }
}

impl Harness {
    fn run(&mut self, config: &str, jobs: Option<usize>) -> Run {
        self.runs += 1;
        let dir = self.root.path().join(format!("run{}", self.runs));
        let over = Overrides { out: Some(dir.clone()), jobs, ..Overrides::default() };
        let start = Instant::now();
        let cfg = ExperimentConfig::parse(config, self.root.path(), &over).expect("acceptance configs are valid");
        if let Err(e) = threadwire_cli::run(&cfg) {
            panic!("run failed: {e}");
        }
        Run { dir, elapsed: start.elapsed() }
    }

    /// Runs the installed binary, returning the exit code and output directory.
    fn run_binary(&mut self, config: &str, jobs: usize) -> (i32, PathBuf) {
        self.runs += 1;
        let cfg_path = self.root.path().join(format!("run{}.cfg", self.runs));
        std::fs::write(&cfg_path, config).unwrap();
        let dir = self.root.path().join(format!("run{}", self.runs));
        let status = Command::new(env!("CARGO_BIN_EXE_threadwire"))
            .arg("--config")
            .arg(&cfg_path)
            .arg("--out")
            .arg(&dir)
            .arg("--jobs")
            .arg(jobs.to_string())
            .output()
            .expect("binary runs");
        (status.status.code().unwrap_or(-1), dir)
    }
}

fn parse_flag(v: &str) -> bool {
    v == "true"
}

/// Least-squares slope of `log y` on `log x`, computed here independently.
fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn competitor_config(lambda: f64, width: &str) -> String {
    format!("{ELLIPSE}[task]\nkind = solve\nstage = competitor\nwidth = {width}\nlambda = {lambda}\nrings = 32\nsectors = 64\n")
}

fn criterion_1(h: &mut Harness) -> Verdict {
    let ell = WireCurve::from_parametric(&CurveFamily::ellipse(2.0, 1.0), 4001).unwrap().length();
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda in [0.005, 0.01, 0.02] {
        let run = h.run(&competitor_config(lambda, "formula"), None);
        let d = run.doc("solve.csv");
        let (energy, len) = (d.floats("energy")[0], d.floats("boundary_length")[0]);
        let d_ok = (energy - lambda / 2.0).abs() <= 0.1 * lambda / 2.0;
        let l_ok = (len - (ell - lambda)).abs() <= 1e-4 * ell;
        let t_ok = run.elapsed < Duration::from_secs(5);
        pass &= d_ok && l_ok && t_ok;
        parts.push(format!(
            "λ={lambda}: D/(λ/2)={:.4} [{}] ℓ(M)-(ℓ(Γ)-λ)={:+.3e} vs ±{:.3e} [{}] {:.2}s [{}]",
            energy / (lambda / 2.0),
            ok(d_ok),
            len - (ell - lambda),
            1e-4 * ell,
            ok(l_ok),
            run.elapsed.as_secs_f64(),
            ok(t_ok)
        ));
    }
    // the width solving chord deficit = λ exactly, for comparison
    let adm = h.run(&competitor_config(0.01, "admissible"), None).doc("solve.csv");
    parts.push(format!(
        "diagnostic, exact-deficit width at λ=0.01: D/(λ/2)={:.4} ℓ error={:+.3e}",
        adm.floats("energy")[0] / 0.005,
        adm.floats("length_error")[0]
    ));
    verdict(pass, parts.join("\n    "))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

const SWEEP: &str = "[task]\nkind = sweep\nlambdas = 0.01, 0.02, 0.05, 0.1\nrings = 32\nsectors = 64\n";

fn criterion_2(h: &mut Harness) -> (Verdict, Option<CsvDoc>) {
    let run = h.run(&format!("{ELLIPSE}{SWEEP}"), None);
    let d = run.doc("sweep.csv");
    let lambdas = d.floats("lambda");
    let r_max = d.floats("r_max");
    let area = d.floats("area");
    let pts: Vec<(f64, f64)> = lambdas.iter().copied().zip(r_max.iter().copied()).collect();
    let slope = loglog_slope(&pts);
    let slope_ok = (0.4..=0.6).contains(&slope);
    let ratio = area[0] / lambdas[0];
    let area_ok = (ratio / 0.5 - 1.0).abs() <= 0.25;
    let t_ok = run.elapsed < Duration::from_secs(600);
    let bound: Vec<String> = lambdas.iter().zip(&r_max).map(|(l, r)| format!("{:.3}", r / (2.0 * l / (std::f64::consts::PI * 2.0)).sqrt())).collect();
    let detail = format!(
        "slope(r_max vs λ)={slope:.4} in [0.4,0.6] [{}]; A/λ at λ=0.01 = {ratio:.4} vs 0.5±25% [{}]; {:.1}s [{}]\n    r_max / (2λ/(πκ_max))^½ = {}",
        ok(slope_ok),
        ok(area_ok),
        run.elapsed.as_secs_f64(),
        ok(t_ok),
        bound.join(", ")
    );
    (verdict(slope_ok && area_ok && t_ok, detail), Some(d))
}

const ISO: &str = "[task]\nkind = iso-check\nheights = 0.5, 1, 2\nslopes = 0, 0.125, 0.25\nfuzz = 10000\nintervals = 100000\n";

fn criterion_3(h: &mut Harness) -> Verdict {
    let run = h.run(ISO, None);
    let d = run.doc("iso-check.csv");
    let (ys, ms, area, per) = (d.floats("height"), d.floats("slope"), d.floats("area"), d.floats("perimeter"));
    let (app, b2) = (d.get("bound2_applicable"), d.get("bound2_holds"));
    let mut v1 = 0;
    let mut v2 = 0;
    let mut applicable = 0;
    let mut cells = std::collections::BTreeSet::new();
    for i in 0..d.rows.len() {
        let (y, m, a, p) = (ys[i], ms[i], area[i], per[i]);
        cells.insert(((y * 1e6) as i64, (m * 1e6) as i64));
        assert!(m * y <= 0.5 + 1e-12);
        let rhs1 = p * p / std::f64::consts::PI / (1.0 - m * y).powi(2);
        v1 += usize::from(a > rhs1 + 1e-9 + 1e-9 * a.max(rhs1));
        if parse_flag(app[i]) {
            applicable += 1;
            v2 += usize::from(!parse_flag(b2[i]));
        }
    }
    let sliced = d.footer_value("total_bound2_sliced_violations").unwrap_or("?").to_string();
    let iv = run.doc("iso-check_intervals.csv");
    let interval_cases: usize = iv.get("cases").iter().map(|c| c.parse::<usize>().unwrap()).sum();
    let interval_violations: usize = iv.get("violations").iter().map(|c| c.parse::<usize>().unwrap()).sum();
    let cases_ok = cells.len() == 9 && d.rows.len() == 90_000 && interval_cases >= 100_000;
    let t_ok = run.elapsed < Duration::from_secs(120);
    let pass = cases_ok && v1 == 0 && v2 == 0 && interval_violations == 0 && t_ok;
    verdict(
        pass,
        format!(
            "{} regions in {} cells: bound 1 violations {v1} [{}]; bound 2 violations {v2} of {applicable} applicable [{}] (sliced-cap form: {sliced}); {interval_cases} interval unions, {interval_violations} violations [{}]; {:.1}s [{}]",
            d.rows.len(),
            cells.len(),
            ok(v1 == 0),
            ok(v2 == 0),
            ok(interval_violations == 0),
            run.elapsed.as_secs_f64(),
            ok(t_ok)
        ),
    )
}

fn criterion_4(h: &mut Harness) -> Verdict {
    let run = h.run("[task]\nkind = rado\ndegrees = 1, 2, 3, 4, 5, 6\nrings = 64\nsectors = 128\n", None);
    let d = run.doc("rado.csv");
    let ks = d.get("degree");
    let ms = d.get("order");
    let sc = d.get("sign_changes");
    let mut pass = d.rows.len() == 6;
    let mut parts = Vec::new();
    for i in 0..d.rows.len() {
        let (k, m, s): (usize, usize, usize) = (ks[i].parse().unwrap(), ms[i].parse().unwrap(), sc[i].parse().unwrap());
        let good = m + 1 == k && s == 2 * k;
        pass &= good;
        parts.push(format!("k={k}: m={m} changes={s}{}", if good { "" } else { " (wrong)" }));
    }
    verdict(pass, parts.join(", "))
}

fn criterion_5(h: &mut Harness) -> Verdict {
    let run = h.run("[task]\nkind = levelset\nfields = 100\nrings = 24\nsectors = 48\nmodes = 4\n", None);
    let d = run.doc("levelset.csv");
    let int = |name: &str| d.get(name).iter().map(|v| v.parse::<i64>().unwrap()).collect::<Vec<_>>();
    let (comp, hits, regions, cycles) = (int("components"), int("boundary_hits"), int("sign_regions"), int("cycles"));
    let (acyclic, val, concl) = (d.get("acyclic"), d.get("valences_ok"), d.get("conclusions"));
    let mut bad = Vec::new();
    let mut applicable = 0;
    for i in 0..d.rows.len() {
        if cycles[i] != 0 || !parse_flag(acyclic[i]) {
            bad.push(format!("field {i} cyclic"));
        }
        if !parse_flag(val[i]) {
            bad.push(format!("field {i} valence"));
        }
        if comp[i] != 1 + hits[i] - regions[i] {
            bad.push(format!("field {i}: {} components, flood fill gives {}", comp[i], 1 + hits[i] - regions[i]));
        }
        if concl[i] != "na" {
            applicable += 1;
            if !parse_flag(concl[i]) {
                bad.push(format!("field {i} count/shape"));
            }
        }
    }
    let pass = d.rows.len() == 100 && bad.is_empty() && applicable > 0;
    verdict(
        pass,
        format!("{} fields, {applicable} with both hypotheses; problems: {}", d.rows.len(), if bad.is_empty() { "none".into() } else { bad.join("; ") }),
    )
}

fn criterion_6(h: &mut Harness) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, wire, kmax) in [("circle", "family = circle\nradius = 1\n", 1.0), ("ellipse", "family = ellipse\na = 2\nb = 1\n", 2.0)] {
        let cfg = format!("[wire]\n{wire}samples = 10001\n[task]\nkind = curve-check\neps = 0.2, 0.1, 0.05\nexport = false\n");
        let d = h.run(&cfg, None).doc("curve-check.csv");
        let r = d.floats("ratio");
        let steps: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
        let monotone = steps.iter().all(|&s| s >= 0.0) || steps.iter().all(|&s| s <= 0.0);
        let converging = steps.windows(2).all(|w| w[1].abs() <= w[0].abs());
        // deviation/ε² = c + O(ε²): extrapolate from the two finest ε
        let limit = (4.0 * r[2] - r[1]) / 3.0;
        let bound = kmax / 8.0 * 1.05;
        let good = monotone && converging && limit <= bound && r.iter().all(|&x| x <= bound);
        pass &= good;
        parts.push(format!(
            "{name}: ratios {:.5}, {:.5}, {:.5}, limit {limit:.5} ≤ {bound:.5} [{}]",
            r[0],
            r[1],
            r[2],
            ok(good)
        ));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_7(sweep: Option<&CsvDoc>) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    match sweep {
        Some(d) => {
            let conv = d.get("converged");
            let kappa = d.floats("kappa");
            let (hull, slices) = (d.get("hull_ok"), d.get("slicewise_ok"));
            let margins = d.floats("hull_margin");
            let mut solved = 0;
            for i in 0..d.rows.len() {
                if !parse_flag(conv[i]) {
                    continue;
                }
                solved += 1;
                let good = kappa[i] >= -1e-3 && parse_flag(hull[i]) && parse_flag(slices[i]);
                pass &= good;
            }
            pass &= solved > 0;
            parts.push(format!(
                "{solved}/{} sweep solves converged; κ ≥ -1e-3, hull and 50-slice checks on all: {}; max hull margin {:.2e}",
                d.rows.len(),
                ok(pass),
                margins.iter().fold(0.0f64, |a, &b| a.max(b))
            ));
        }
        None => {
            pass = false;
            parts.push("no sweep output".into());
        }
    }

    // negative controls built from a small solve
    let wire = Arc::new(WireCurve::from_parametric(&CurveFamily::ellipse(2.0, 1.0), 4001).unwrap());
    let p0 = build_competitor_p0(wire.clone(), 0.05, WidthRule::Admissible, 12, 32).unwrap();
    let problem = ThreadProblem::new(wire.clone(), 0.05, SolverSettings::default()).unwrap();
    let good = minimize(&problem, &p0).unwrap().crescent;
    let chart = TubularChart::new(wire, 0.9).unwrap();
    let mesh = good.mesh().clone();

    let mut pos = good.positions().to_vec();
    pos[mesh.vertex(mesh.rings() / 2, mesh.sectors() / 4)].z += 0.01;
    let pushed = good.with_positions(pos, good.attachment().to_vec()).unwrap();
    let hull_caught = !verify_convex_hull(&pushed).holds;

    let (a, b) = (good.positions()[good.lower_vertex(0)], good.positions()[good.lower_vertex(good.attachment().len() - 1)]);
    let axis = (b - a).normalize();
    let mut pos = good.positions().to_vec();
    for (v, p) in pos.iter_mut().enumerate() {
        if mesh.arc(v) != Some(BoundaryArc::Lower) {
            let d = *p - a;
            let along = axis * d.dot(&axis);
            *p = a + along - (d - along);
        }
    }
    let mut mirrored = good.with_positions(pos, good.attachment().to_vec()).unwrap();
    mirrored.harmonic_replace().unwrap();
    let kappa_caught = extract_kappa(&mirrored).unwrap().kappa < -1e-3;

    let mut pos = good.positions().to_vec();
    let s = mesh.sectors();
    pos.swap(mesh.vertex(mesh.rings(), s / 8), mesh.vertex(mesh.rings(), 3 * s / 8));
    let swapped = good.with_positions(pos, good.attachment().to_vec()).unwrap();
    let slices_caught = !verify_slicewise(&swapped, &chart, 50).unwrap().holds;

    pass &= hull_caught && kappa_caught && slices_caught;
    parts.push(format!(
        "negative controls rejected: pushed vertex by hull [{}], mirrored thread by κ [{}], swapped thread vertices by slices [{}]",
        ok(hull_caught),
        ok(kappa_caught),
        ok(slices_caught)
    ));
    verdict(pass, parts.join("\n    "))
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map(|rd| rd.flatten().map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())).collect())
        .unwrap_or_default();
    v.sort();
    v
}

fn criterion_8(h: &mut Harness) -> Verdict {
    let configs = [
        ("competitor", competitor_config(0.01, "formula")),
        ("sweep", format!("{ELLIPSE}{SWEEP}")),
        ("iso-check", ISO.to_string()),
        ("rado", "[task]\nkind = rado\nrings = 64\nsectors = 128\n".to_string()),
        ("levelset", "[task]\nkind = levelset\nfields = 100\n".to_string()),
        ("curve-check", "[wire]\nfamily = ellipse\nsamples = 10001\n[task]\nkind = curve-check\n".to_string()),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, cfg) in &configs {
        let (c1, d1) = h.run_binary(cfg, 1);
        let (c2, d2) = h.run_binary(cfg, 4);
        let (f1, f2) = (files_in(&d1), files_in(&d2));
        let same = c1 == c2 && !f1.is_empty() && f1 == f2;
        pass &= same;
        parts.push(format!("{name}: {} files, exit {c1}/{c2}, identical [{}]", f1.len(), ok(same)));
    }
    verdict(pass, parts.join("; "))
}

fn main() {
    let mut h = Harness { root: tempfile::tempdir().expect("temp dir"), runs: 0 };
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut report = |n: usize, title: &'static str, v: Verdict| {
        println!("{} criterion {n} ({title}): {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, title, v));
    };
    report(1, "competitor formulas", criterion_1(&mut h));
    let (v2, sweep) = criterion_2(&mut h);
    report(2, "near-wire scaling", v2);
    report(3, "weighted isoperimetry", criterion_3(&mut h));
    report(4, "Radó counts", criterion_4(&mut h));
    report(5, "level-set structure", criterion_5(&mut h));
    report(6, "jointed pipe", criterion_6(&mut h));
    report(7, "verification checks on solves", criterion_7(sweep.as_ref()));
    report(8, "determinism", criterion_8(&mut h));
    let failed: Vec<String> = results.iter().filter(|r| !r.2.pass).map(|r| r.0.to_string()).collect();
    println!("acceptance: {}/{} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failing criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
