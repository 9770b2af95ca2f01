use std::fmt::Write as _;
use std::path::PathBuf;

use super::family::CurveFamily;
use super::wire::WireCurve;
use super::CurveError;
use crate::Vec3;

/// A wire definition: a built-in family or a file of equally spaced points.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveSpec {
    Family { family: CurveFamily, samples: usize },
    Points { path: PathBuf, closed: bool },
}

fn num(pairs: &[(String, String)], key: &str, default: Option<f64>) -> Result<f64, CurveError> {
    match pairs.iter().rev().find(|(k, _)| k == key) {
        Some((_, v)) => v.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| CurveError::Config(format!("{key}: not a number: {v}"))),
        None => default.ok_or_else(|| CurveError::Config(format!("missing key {key}"))),
    }
}

fn positive(pairs: &[(String, String)], key: &str, default: Option<f64>) -> Result<f64, CurveError> {
    let v = num(pairs, key, default)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CurveError::Config(format!("{key} must be positive, got {v}")))
    }
}

impl CurveSpec {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CurveError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CurveError::Config(format!("line {}: expected key = value", i + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Self::from_pairs(&pairs)
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, CurveError> {
        let get = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        if let Some(path) = get("file") {
            let closed = match get("closed").unwrap_or("false") {
                "true" | "1" | "yes" => true,
                "false" | "0" | "no" => false,
                other => return Err(CurveError::Config(format!("closed: expected a boolean, got {other}"))),
            };
            return Ok(CurveSpec::Points { path: PathBuf::from(path), closed });
        }
        let name = get("family").ok_or_else(|| CurveError::Config("missing key family".into()))?;
        let samples = num(pairs, "samples", Some(4001.0))?;
        if samples.fract() != 0.0 || !(5.0..=1e7).contains(&samples) {
            return Err(CurveError::Config(format!("samples must be an integer in [5, 1e7], got {samples}")));
        }
        let phase = num(pairs, "phase", None).ok();
        let family = match name {
            "circle" => CurveFamily::Circle { radius: positive(pairs, "radius", Some(1.0))?, phase: phase.unwrap_or(0.0) },
            "ellipse" => {
                let base = CurveFamily::ellipse(positive(pairs, "a", Some(2.0))?, positive(pairs, "b", Some(1.0))?);
                match (base, phase) {
                    (CurveFamily::Ellipse { a, b, .. }, Some(p)) => CurveFamily::Ellipse { a, b, phase: p },
                    (f, _) => f,
                }
            }
            "saddle" => CurveFamily::Saddle {
                a: positive(pairs, "a", Some(2.0))?,
                b: positive(pairs, "b", Some(1.0))?,
                c: num(pairs, "c", Some(0.3))?,
                phase: phase.unwrap_or(0.0),
            },
            "helix" => CurveFamily::Helix {
                radius: positive(pairs, "radius", Some(1.0))?,
                rise: num(pairs, "rise", Some(0.3))?,
                turns: positive(pairs, "turns", Some(1.0))?,
            },
            "segment" => CurveFamily::Segment { length: positive(pairs, "length", Some(1.0))? },
            other => return Err(CurveError::Config(format!("unknown family {other}"))),
        };
        Ok(CurveSpec::Family { family, samples: samples as usize })
    }

    pub fn build(&self) -> Result<WireCurve, CurveError> {
        match self {
            CurveSpec::Family { family, samples } => WireCurve::from_parametric(family, *samples),
            CurveSpec::Points { path, closed } => {
                let text = std::fs::read_to_string(path).map_err(|e| CurveError::Config(format!("{}: {e}", path.display())))?;
                let mut pts = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') || line.starts_with(|c: char| c.is_alphabetic()) {
                        continue;
                    }
                    let v: Vec<f64> = line
                        .split(',')
                        .map(|t| t.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| CurveError::Config(format!("{}:{}: bad number", path.display(), i + 1)))?;
                    if v.len() != 3 {
                        return Err(CurveError::Config(format!("{}:{}: expected x,y,z", path.display(), i + 1)));
                    }
                    pts.push(Vec3::new(v[0], v[1], v[2]));
                }
                WireCurve::from_points(&pts, *closed)
            }
        }
    }
}

/// CSV export with columns `s,x,y,z,kappa,torsion`.
pub fn curve_csv(wire: &WireCurve) -> String {
    let mut out = String::from("s,x,y,z,kappa,torsion\n");
    for k in 0..wire.samples().len() {
        let smp = &wire.samples()[k];
        let _ = writeln!(
            out,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            smp.s, smp.pos.x, smp.pos.y, smp.pos.z, wire.curvature(k), wire.torsion(k)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_family_config() {
        let spec = CurveSpec::parse("family = ellipse # the default wire\na = 2\nb = 1\nsamples = 801\n").unwrap();
        let w = spec.build().unwrap();
        assert!(w.is_closed());
        assert_eq!(w.samples().len(), 801);
        let csv = curve_csv(&w);
        assert_eq!(csv.lines().count(), 802);
        assert!(csv.starts_with("s,x,y,z,kappa,torsion"));
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(CurveSpec::parse("family = trefoil").is_err());
        assert!(CurveSpec::parse("family = circle\nradius = -1").is_err());
        assert!(CurveSpec::parse("family circle").is_err());
        assert!(CurveSpec::parse("family = circle\nsamples = 3.5").is_err());
    }
}
