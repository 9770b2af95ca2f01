use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use threadwire::isoperimetry::{
    fuzz_intervals, iso_bound_1, iso_bound_2, iso_bound_2_sliced, random_region, weighted_perimeter, BoundCheck, StripRegion,
};

use crate::config::{ExperimentConfig, PolygonSource, Task};
use crate::csv::{flag, num, Table};
use crate::{Artifacts, CliError};

const COLUMNS: [&str; 13] = [
    "height",
    "slope",
    "region",
    "polygons",
    "area",
    "perimeter",
    "bound1_rhs",
    "bound1_holds",
    "bound2_applicable",
    "bound2_rhs",
    "bound2_holds",
    "bound2_sliced_rhs",
    "bound2_sliced_holds",
];

/// Reads `x,y` vertex loops separated by blank lines.
fn load_polygons(path: &Path) -> Result<Vec<Vec<[f64; 2]>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut polys = vec![Vec::new()];
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            if !polys.last().expect("nonempty").is_empty() {
                polys.push(Vec::new());
            }
            continue;
        }
        let v: Option<Vec<f64>> = line.split(',').map(|t| t.trim().parse::<f64>().ok().filter(|x| x.is_finite())).collect();
        match v.as_deref() {
            Some([x, y]) => polys.last_mut().expect("nonempty").push([*x, *y]),
            _ => return Err(CliError::Config(format!("{}:{}: expected x,y", path.display(), i + 1))),
        }
    }
    polys.retain(|p| !p.is_empty());
    Ok(polys)
}

struct Cell {
    height: f64,
    slope: f64,
    checks: Vec<(usize, f64, f64, BoundCheck, BoundCheck, BoundCheck)>,
}

fn cell_seed(seed: u64, cell: usize) -> u64 {
    seed ^ (cell as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

pub(super) fn iso_check(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let Task::IsoCheck { heights, slopes, source, intervals, max_intervals } = &cfg.task else {
        unreachable!("dispatched on task kind")
    };
    let file_polys = match source {
        PolygonSource::File(p) => Some(load_polygons(p)?),
        PolygonSource::Fuzz(_) => None,
    };
    let grid: Vec<(f64, f64)> = heights.iter().flat_map(|&y| slopes.iter().map(move |&m| (y, m))).collect();
    let mut cells = Vec::with_capacity(grid.len());
    for (ci, &(y, m)) in grid.iter().enumerate() {
        let regions: Vec<StripRegion> = match (&file_polys, source) {
            (Some(polys), _) => {
                vec![StripRegion::new(y, m, None, polys.clone()).map_err(|e| CliError::Config(format!("polygons: {e}")))?]
            }
            (None, PolygonSource::Fuzz(n)) => (0..*n)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(cfg.seed, ci));
                    rng.set_stream(i as u64);
                    random_region(&mut rng, y, m)
                })
                .collect(),
            (None, PolygonSource::File(_)) => unreachable!("file polygons loaded above"),
        };
        let checks = regions
            .par_iter()
            .map(|k| (k.polygons().len(), k.area(), weighted_perimeter(k), iso_bound_1(k), iso_bound_2(k), iso_bound_2_sliced(k)))
            .collect();
        cells.push(Cell { height: y, slope: m, checks });
    }

    let mut t = Table::new(&COLUMNS);
    let (mut b1_total, mut b2_total, mut b2s_total) = (0, 0, 0);
    let mut notes = Vec::new();
    for c in &cells {
        let (mut b1, mut app, mut b2, mut b2s) = (0, 0, 0, 0);
        for (i, (polys, area, p, c1, c2, c2s)) in c.checks.iter().enumerate() {
            b1 += usize::from(!c1.holds);
            app += usize::from(c2.applicable);
            b2 += usize::from(!c2.holds);
            b2s += usize::from(!c2s.holds);
            t.push(vec![
                num(c.height),
                num(c.slope),
                i.to_string(),
                polys.to_string(),
                num(*area),
                num(*p),
                num(c1.rhs),
                flag(c1.holds),
                flag(c2.applicable),
                num(c2.rhs),
                flag(c2.holds),
                num(c2s.rhs),
                flag(c2s.holds),
            ]);
        }
        notes.push(format!(
            "height={} slope={} cases={} bound1_violations={b1} bound2_applicable={app} bound2_violations={b2} bound2_sliced_violations={b2s}",
            num(c.height),
            num(c.slope),
            c.checks.len()
        ));
        b1_total += b1;
        b2_total += b2;
        b2s_total += b2s;
    }
    for n in notes {
        t.note(n);
    }
    t.note(format!("total_bound1_violations={b1_total} total_bound2_violations={b2_total} total_bound2_sliced_violations={b2s_total}"));

    let mut summary = vec![format!(
        "{} regions over {} (Y, m) cells: bound 1 violations {b1_total}, bound 2 violations {b2_total} (sliced form {b2s_total})",
        cells.iter().map(|c| c.checks.len()).sum::<usize>(),
        cells.len()
    )];
    let mut files = vec![(format!("{}.csv", cfg.stem), t.render(&cfg.digest, cfg.seed))];
    let mut interval_violations = 0;
    if *intervals > 0 {
        let mut it = Table::new(&["height", "cases", "violations", "worst_ratio"]);
        for (hi, &y) in heights.iter().enumerate() {
            let s = fuzz_intervals(y, *max_intervals, *intervals, cell_seed(cfg.seed, grid.len() + hi));
            interval_violations += s.violations;
            it.push(vec![num(y), s.cases.to_string(), s.violations.to_string(), num(s.worst_ratio)]);
        }
        it.note(format!("total_violations={interval_violations}"));
        summary.push(format!("{} interval unions per height: {interval_violations} violations", intervals));
        files.push((format!("{}_intervals.csv", cfg.stem), it.render(&cfg.digest, cfg.seed)));
    }
    Ok(Artifacts { files, verified: b1_total == 0 && b2_total == 0 && interval_violations == 0, summary })
}
