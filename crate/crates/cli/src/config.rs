//! Sectioned `key = value` experiment configs.
//!
//! ```text
//! [wire]
//! family = ellipse
//! a = 2
//! b = 1
//!
//! [task]
//! kind = sweep
//! lambdas = 0.01, 0.02, 0.05, 0.1
//!
//! [run]
//! seed = 7
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use threadwire::curvegeom::CurveSpec;
use threadwire::solver::WidthRule;

use crate::CliError;

const SECTIONS: [&str; 5] = ["wire", "task", "output", "tolerances", "run"];

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Reads the raw sections, rejecting unknown sections and repeated keys.
fn parse_sections(text: &str) -> Result<Sections, CliError> {
    let mut out = Sections::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(bad(format!("line {}: unknown section [{name}]", i + 1)));
            }
            out.entry(name.to_string()).or_default();
            current = Some(name.to_string());
            continue;
        }
        let section = current.as_ref().ok_or_else(|| bad(format!("line {}: key outside a section", i + 1)))?;
        let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(bad(format!("line {}: empty key", i + 1)));
        }
        let entries = out.get_mut(section).expect("section registered");
        if entries.insert(k.to_string(), v.to_string()).is_some() {
            return Err(bad(format!("line {}: duplicate key {section}.{k}", i + 1)));
        }
    }
    Ok(out)
}

/// Typed access to one section that remembers which keys were read.
struct Section<'a> {
    name: &'static str,
    entries: Option<&'a BTreeMap<String, String>>,
    used: Vec<String>,
}

impl<'a> Section<'a> {
    fn new(all: &'a Sections, name: &'static str) -> Self {
        Section { name, entries: all.get(name), used: Vec::new() }
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        self.used.push(key.to_string());
        self.entries.and_then(|e| e.get(key)).map(String::as_str)
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        bad(format!("{}.{key}: {msg}", self.name))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_f64(v).ok_or_else(|| self.err(key, format!("not a finite number: {v}"))),
        }
    }

    fn positive_or(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.f64_or(key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(key, format!("must be positive, got {v}")))
        }
    }

    fn usize_or(&mut self, key: &str, default: usize, range: std::ops::RangeInclusive<usize>) -> Result<usize, CliError> {
        let v = match self.raw(key) {
            None => default,
            Some(v) => v.parse::<usize>().map_err(|_| self.err(key, format!("not a non-negative integer: {v}")))?,
        };
        if range.contains(&v) {
            Ok(v)
        } else {
            Err(self.err(key, format!("{v} outside [{}, {}]", range.start(), range.end())))
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(self.err(key, format!("expected a boolean, got {v}"))),
        }
    }

    fn list_or(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => {
                let items: Option<Vec<f64>> = v.split(',').map(|t| parse_f64(t.trim())).collect();
                match items {
                    Some(xs) if !xs.is_empty() => Ok(xs),
                    _ => Err(self.err(key, format!("expected a comma-separated list of numbers, got {v}"))),
                }
            }
        }
    }

    /// Fails on keys that no accessor asked for.
    fn finish(self) -> Result<(), CliError> {
        if let Some(e) = self.entries {
            if let Some(k) = e.keys().find(|k| !self.used.contains(k)) {
                return Err(bad(format!("unknown key {}.{k}", self.name)));
            }
        }
        Ok(())
    }
}

fn parse_f64(v: &str) -> Option<f64> {
    v.parse::<f64>().ok().filter(|x| x.is_finite())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub energy_tol: f64,
    pub constraint_tol: f64,
    pub max_iterations: usize,
    pub perturbation: f64,
    /// Relative slack of the near-wire radius and area bounds.
    pub near_wire_slack: f64,
    /// Competitor energy within this fraction of `λ/κ_max`.
    pub deficit_tol: f64,
    /// Competitor `ℓ(M)` within this fraction of `ℓ(Γ)` of the budget.
    pub length_tol: f64,
    pub slope_min: f64,
    pub slope_max: f64,
    /// `A/λ` at the smallest deficit within this fraction of `1/κ_max`.
    pub area_ratio_tol: f64,
    pub frame_tol: f64,
    pub roundtrip_tol: f64,
    /// Pipe ratio bound `κ_max/8 · (1 + pipe_slack)`.
    pub pipe_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            energy_tol: 1e-9,
            constraint_tol: 1e-6,
            max_iterations: 100_000,
            perturbation: 0.0,
            near_wire_slack: 0.5,
            deficit_tol: 0.1,
            length_tol: 1e-4,
            slope_min: 0.4,
            slope_max: 0.6,
            area_ratio_tol: 0.25,
            frame_tol: 1e-8,
            roundtrip_tol: 1e-8,
            pipe_slack: 0.05,
        }
    }
}

impl Tolerances {
    fn read(s: &mut Section) -> Result<Self, CliError> {
        let d = Tolerances::default();
        let t = Tolerances {
            energy_tol: s.positive_or("energy_tol", d.energy_tol)?,
            constraint_tol: s.positive_or("constraint_tol", d.constraint_tol)?,
            max_iterations: s.usize_or("max_iterations", d.max_iterations, 1..=100_000_000)?,
            perturbation: s.f64_or("perturbation", d.perturbation)?,
            near_wire_slack: s.f64_or("near_wire_slack", d.near_wire_slack)?,
            deficit_tol: s.positive_or("deficit_tol", d.deficit_tol)?,
            length_tol: s.positive_or("length_tol", d.length_tol)?,
            slope_min: s.f64_or("slope_min", d.slope_min)?,
            slope_max: s.f64_or("slope_max", d.slope_max)?,
            area_ratio_tol: s.positive_or("area_ratio_tol", d.area_ratio_tol)?,
            frame_tol: s.positive_or("frame_tol", d.frame_tol)?,
            roundtrip_tol: s.positive_or("roundtrip_tol", d.roundtrip_tol)?,
            pipe_slack: s.f64_or("pipe_slack", d.pipe_slack)?,
        };
        if !(0.0..1.0).contains(&t.perturbation) {
            return Err(bad(format!("tolerances.perturbation must lie in [0, 1), got {}", t.perturbation)));
        }
        if t.near_wire_slack < 0.0 || t.pipe_slack < 0.0 {
            return Err(bad("tolerances: slack values must be non-negative"));
        }
        if t.slope_min > t.slope_max {
            return Err(bad("tolerances.slope_min exceeds slope_max"));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolygonSource {
    Fuzz(usize),
    /// Vertex loops `x,y`, one polygon per blank-line-separated block.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Solve { lambda: f64, rings: usize, sectors: usize, width: WidthRule, competitor_only: bool, dump_mesh: bool },
    Sweep { lambdas: Vec<f64>, rings: usize, sectors: usize, width: WidthRule },
    IsoCheck { heights: Vec<f64>, slopes: Vec<f64>, source: PolygonSource, intervals: usize, max_intervals: usize },
    Rado { degrees: Vec<usize>, rings: usize, sectors: usize },
    LevelSet { fields: usize, rings: usize, sectors: usize, modes: usize },
    CurveCheck { eps: Vec<f64>, chart_points: usize, export: bool },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Solve { .. } => "solve",
            Task::Sweep { .. } => "sweep",
            Task::IsoCheck { .. } => "iso-check",
            Task::Rado { .. } => "rado",
            Task::LevelSet { .. } => "levelset",
            Task::CurveCheck { .. } => "curve-check",
        }
    }

    fn needs_wire(&self) -> bool {
        matches!(self, Task::Solve { .. } | Task::Sweep { .. } | Task::CurveCheck { .. })
    }
}

fn width_rule(s: &mut Section) -> Result<WidthRule, CliError> {
    match s.raw("width") {
        None | Some("admissible") => Ok(WidthRule::Admissible),
        Some("formula") => Ok(WidthRule::Formula),
        Some(v) => match parse_f64(v) {
            Some(w) if w > 0.0 => Ok(WidthRule::Fixed(w)),
            _ => Err(s.err("width", format!("expected admissible, formula or a positive number, got {v}"))),
        },
    }
}

fn mesh_size(s: &mut Section, rings: usize, sectors: usize) -> Result<(usize, usize), CliError> {
    let r = s.usize_or("rings", rings, 2..=4096)?;
    let n = s.usize_or("sectors", sectors, 8..=16384)?;
    if n % 4 != 0 {
        return Err(s.err("sectors", format!("must be a multiple of 4, got {n}")));
    }
    Ok((r, n))
}

fn deficit(s: &mut Section, key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(s.err(key, format!("deficits must be positive, got {v}")))
    }
}

fn read_task(s: &mut Section, base: &Path) -> Result<Task, CliError> {
    let kind = s.raw("kind").ok_or_else(|| bad("missing key task.kind"))?;
    let task = match kind {
        "solve" => {
            let lambda = s.f64_or("lambda", 0.05)?;
            let lambda = deficit(s, "lambda", lambda)?;
            let (rings, sectors) = mesh_size(s, 32, 64)?;
            let width = width_rule(s)?;
            let competitor_only = match s.raw("stage") {
                None | Some("minimize") => false,
                Some("competitor") => true,
                Some(v) => return Err(s.err("stage", format!("expected minimize or competitor, got {v}"))),
            };
            Task::Solve { lambda, rings, sectors, width, competitor_only, dump_mesh: s.bool_or("mesh", false)? }
        }
        "sweep" => {
            let mut lambdas = s.list_or("lambdas", &[0.01, 0.02, 0.05, 0.1])?;
            for &l in &lambdas {
                deficit(s, "lambdas", l)?;
            }
            lambdas.sort_by(f64::total_cmp);
            lambdas.dedup();
            if lambdas.len() < 2 {
                return Err(s.err("lambdas", "a sweep needs at least two distinct deficits"));
            }
            let (rings, sectors) = mesh_size(s, 32, 64)?;
            Task::Sweep { lambdas, rings, sectors, width: width_rule(s)? }
        }
        "iso-check" => {
            let heights = s.list_or("heights", &[1.0])?;
            let slopes = s.list_or("slopes", &[0.0])?;
            for &y in &heights {
                for &m in &slopes {
                    if !(y > 0.0 && m >= 0.0 && m * y < 1.0) {
                        return Err(bad(format!("task: need Y > 0 and 0 <= mY < 1, got Y={y}, m={m}")));
                    }
                }
            }
            let source = match (s.raw("polygons"), s.raw("fuzz")) {
                (Some(_), Some(_)) => return Err(bad("task: give either polygons or fuzz, not both")),
                (Some(p), None) => PolygonSource::File(existing(base, p, "task.polygons")?),
                (None, f) => {
                    let n = f.map_or(Ok(1000), |v| v.parse::<usize>().map_err(|_| s.err("fuzz", format!("not a count: {v}"))))?;
                    PolygonSource::Fuzz(n)
                }
            };
            let intervals = s.usize_or("intervals", 0, 0..=100_000_000)?;
            let max_intervals = s.usize_or("max_intervals", 8, 1..=1000)?;
            Task::IsoCheck { heights, slopes, source, intervals, max_intervals }
        }
        "rado" => {
            let degrees = match (s.raw("degree"), s.list_or("degrees", &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])?) {
                (Some(d), _) => vec![d.parse::<f64>().map_err(|_| s.err("degree", format!("not an integer: {d}")))?],
                (None, ds) => ds,
            };
            let degrees: Vec<usize> = degrees
                .iter()
                .map(|&d| if d.fract() == 0.0 && (1.0..=32.0).contains(&d) { Ok(d as usize) } else { Err(bad(format!("task: degree {d} not an integer in [1, 32]"))) })
                .collect::<Result<_, _>>()?;
            let (rings, sectors) = mesh_size(s, 64, 128)?;
            Task::Rado { degrees, rings, sectors }
        }
        "levelset" => {
            let fields = s.usize_or("fields", 100, 1..=1_000_000)?;
            let (rings, sectors) = mesh_size(s, 24, 48)?;
            let modes = s.usize_or("modes", 4, 1..=64)?;
            if 2 * modes >= sectors {
                return Err(s.err("modes", "too many modes for the boundary resolution"));
            }
            Task::LevelSet { fields, rings, sectors, modes }
        }
        "curve-check" => {
            let eps = s.list_or("eps", &[0.2, 0.1, 0.05])?;
            if eps.iter().any(|&e| !(e > 0.0)) {
                return Err(s.err("eps", "segment lengths must be positive"));
            }
            let chart_points = s.usize_or("chart_points", 1000, 0..=10_000_000)?;
            Task::CurveCheck { eps, chart_points, export: s.bool_or("export", true)? }
        }
        other => return Err(bad(format!("unknown task.kind {other}"))),
    };
    Ok(task)
}

fn existing(base: &Path, p: &str, key: &str) -> Result<PathBuf, CliError> {
    let path = base.join(p);
    if path.is_file() {
        Ok(path)
    } else {
        Err(bad(format!("{key}: file {} does not exist", path.display())))
    }
}

/// Command-line settings that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    /// `KEY=VAL` pairs applied to the `[tolerances]` section.
    pub tolerances: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub wire: Option<CurveSpec>,
    pub task: Task,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// File stem for the task's main CSV; defaults to the task name.
    pub stem: String,
    pub jobs: Option<usize>,
    pub tolerances: Tolerances,
    /// SHA-256 of the canonical form of every setting that affects results.
    pub digest: String,
}

impl ExperimentConfig {
    pub fn load(path: &Path, over: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base, over)
    }

    /// Parses config text; relative file references resolve against `base`.
    pub fn parse(text: &str, base: &Path, over: &Overrides) -> Result<Self, CliError> {
        let mut all = parse_sections(text)?;
        for kv in &over.tolerances {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("--tol-override expects KEY=VAL, got {kv}")))?;
            all.entry("tolerances".into()).or_default().insert(k.trim().to_string(), v.trim().to_string());
        }
        if let Some(seed) = over.seed {
            all.entry("run".into()).or_default().insert("seed".into(), seed.to_string());
        }

        let mut task_s = Section::new(&all, "task");
        let task = read_task(&mut task_s, base)?;
        task_s.finish()?;

        let wire = match all.get("wire") {
            Some(pairs) => {
                let mut pairs: Vec<(String, String)> = pairs.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
                if let Some((_, file)) = pairs.iter_mut().find(|(k, _)| k == "file") {
                    *file = existing(base, file, "wire.file")?.to_string_lossy().into_owned();
                }
                Some(CurveSpec::from_pairs(&pairs).map_err(|e| bad(format!("wire: {e}")))?)
            }
            None => None,
        };
        if task.needs_wire() && wire.is_none() {
            return Err(bad(format!("task {} needs a [wire] section", task.name())));
        }

        let mut tol_s = Section::new(&all, "tolerances");
        let tolerances = Tolerances::read(&mut tol_s)?;
        tol_s.finish()?;

        let mut run_s = Section::new(&all, "run");
        let seed = match run_s.raw("seed") {
            None => 0,
            Some(v) => v.parse::<u64>().map_err(|_| bad(format!("run.seed: not an unsigned integer: {v}")))?,
        };
        let jobs = match over.jobs {
            Some(j) => Some(j),
            None => run_s.raw("jobs").map(|v| v.parse::<usize>().map_err(|_| bad(format!("run.jobs: not a count: {v}")))).transpose()?,
        };
        run_s.raw("jobs");
        run_s.finish()?;
        if jobs == Some(0) {
            return Err(bad("jobs must be at least 1"));
        }

        let mut out_s = Section::new(&all, "output");
        let out_dir = match &over.out {
            Some(p) => p.clone(),
            None => out_s.raw("dir").map_or_else(|| base.join("out"), |d| base.join(d)),
        };
        out_s.raw("dir");
        let stem = out_s.raw("name").unwrap_or(task.name()).to_string();
        out_s.finish()?;
        if stem.is_empty() || stem.contains(['/', '\\']) {
            return Err(bad(format!("output.name must be a plain file stem, got {stem:?}")));
        }

        Ok(ExperimentConfig { wire, task, seed, out_dir, stem, jobs, tolerances, digest: digest(&all) })
    }
}

/// Hash of the sections that determine results; output placement and
/// worker count are left out so they cannot change the CSV bodies.
fn digest(all: &Sections) -> String {
    let mut h = Sha256::new();
    for (section, entries) in all {
        if section == "output" {
            continue;
        }
        for (k, v) in entries {
            if section == "run" && k == "jobs" {
                continue;
            }
            h.update(format!("{section}.{k}={v}\n").as_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWEEP: &str = "
        # ellipse sweep
        [wire]
        family = ellipse
        a = 2
        b = 1

        [task]
        kind = sweep
        lambdas = 0.1, 0.01, 0.05
        rings = 16
        sectors = 32

        [run]
        seed = 4
        jobs = 2
    ";

    fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::parse(text, Path::new("."), &Overrides::default())
    }

    #[test]
    fn sweep_config() {
        let c = parse(SWEEP).unwrap();
        assert_eq!(c.task, Task::Sweep { lambdas: vec![0.01, 0.05, 0.1], rings: 16, sectors: 32, width: WidthRule::Admissible });
        assert_eq!((c.seed, c.jobs, c.stem.as_str()), (4, Some(2), "sweep"));
        assert_eq!(c.digest.len(), 64);
    }

    #[test]
    fn digest_ignores_placement_but_not_settings() {
        let a = parse(SWEEP).unwrap();
        let moved = ExperimentConfig::parse(SWEEP, Path::new("."), &Overrides { out: Some("/tmp/x".into()), jobs: Some(7), ..Default::default() }).unwrap();
        assert_eq!(a.digest, moved.digest);
        let reseeded = ExperimentConfig::parse(SWEEP, Path::new("."), &Overrides { seed: Some(5), ..Default::default() }).unwrap();
        assert_ne!(a.digest, reseeded.digest);
        assert_eq!(reseeded.seed, 5);
        let tightened = ExperimentConfig::parse(SWEEP, Path::new("."), &Overrides { tolerances: vec!["energy_tol=1e-10".into()], ..Default::default() }).unwrap();
        assert_ne!(a.digest, tightened.digest);
        assert_eq!(tightened.tolerances.energy_tol, 1e-10);
    }

    #[test]
    fn malformed_configs_are_rejected() {
        for text in [
            "kind = solve",
            "[task]\nkind = solve\n[wire]\nfamily = ellipse\n[bogus]\n",
            "[task]\nkind = solve\nkind = sweep\n",
            "[task]\nkind = solve\n",
            "[task]\nkind = teleport\n",
            "[task]\nkind = rado\ndegree = 2.5\n",
            "[task]\nkind = rado\nsectors = 30\n",
            "[task]\nkind = levelset\ncolour = red\n",
            "[task]\nkind = iso-check\nheights = 1\nslopes = 1\n",
            "[task]\nkind = iso-check\npolygons = /no/such/file.csv\n",
            "[wire]\nfamily = ellipse\n[task]\nkind = solve\nlambda = -1\n",
            "[wire]\nfamily = blob\n[task]\nkind = solve\n",
            "[task]\nkind = rado\n[tolerances]\nenergy_tol = fast\n",
            "[task]\nkind = rado\n[run]\nseed = -3\n",
        ] {
            assert!(matches!(parse(text), Err(CliError::Config(_))), "{text}");
        }
        let bad_override = Overrides { tolerances: vec!["frame_tol".into()], ..Default::default() };
        assert!(ExperimentConfig::parse("[task]\nkind = rado\n", Path::new("."), &bad_override).is_err());
        let unknown = Overrides { tolerances: vec!["nonsense=1".into()], ..Default::default() };
        assert!(ExperimentConfig::parse("[task]\nkind = rado\n", Path::new("."), &unknown).is_err());
    }
}
