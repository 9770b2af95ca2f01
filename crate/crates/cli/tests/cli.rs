use std::path::Path;
use std::process::{Command, Output};

use threadwire_cli::{CsvDoc, ExperimentConfig, Overrides};

fn threadwire(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_threadwire"))
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn write_cfg(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

fn is_empty_or_missing(dir: &Path) -> bool {
    std::fs::read_dir(dir).map_or(true, |mut d| d.next().is_none())
}

#[test]
fn single_degree_rado_writes_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "[task]\nkind = rado\ndegrees = 3\n[output]\nname = r3\n");
    let out = tmp.path().join("out");
    let o = threadwire(&cfg, &out, &["--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = CsvDoc::parse(&std::fs::read_to_string(out.join("r3.csv")).unwrap()).unwrap();
    assert_eq!(doc.seed, 7);
    assert_eq!(doc.rows.len(), 1);
    assert_eq!(doc.get("order"), ["2"]);
    assert_eq!(doc.get("sign_changes"), ["6"]);
    assert_eq!(doc.footer_value("all_hold"), Some("true"));
}

#[test]
fn malformed_configs_exit_2_without_output() {
    let cases = [
        "[task]\nkind = rado\nbogus = 1\n",
        "[tasks]\nkind = rado\n",
        "[task]\nkind = rado\nkind = rado\n",
        "kind = rado\n",
        "[task]\nkind = sweep\nlambdas = 0.01\n",
        "[wire]\nfamily = ellipse\n[task]\nkind = solve\nlambda = -1\n",
        "[wire]\nfamily = trefoil\n[task]\nkind = curve-check\n",
        "[wire]\nfamily = segment\n[task]\nkind = solve\nlambda = 0.1\n",
        "[task]\nkind = levelset\nsectors = 30\n",
        "[task]\nkind = iso-check\npolygons = missing.txt\n",
    ];
    for text in cases {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = write_cfg(tmp.path(), text);
        let out = tmp.path().join("out");
        let o = threadwire(&cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{text:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(is_empty_or_missing(&out), "{text:?} wrote output");
    }
}

#[test]
fn missing_config_file_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = threadwire(&tmp.path().join("absent.cfg"), &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_verification_exits_4_and_keeps_files() {
    let tmp = tempfile::tempdir().unwrap();
    // a tolerance nobody can meet
    let cfg = write_cfg(tmp.path(), "[wire]\nfamily = circle\nsamples = 2001\n[task]\nkind = curve-check\neps = 0.2, 0.1\n");
    let out = tmp.path().join("out");
    let o = threadwire(&cfg, &out, &["--tol-override", "frame_tol=1e-30"]);
    assert_eq!(o.status.code(), Some(4));
    let doc = CsvDoc::parse(&std::fs::read_to_string(out.join("curve-check.csv")).unwrap()).unwrap();
    assert_eq!(doc.footer_value("frame_ok"), Some("false"));
    assert!(out.join("curve-check_samples.csv").exists());
}

#[test]
fn polygon_file_is_checked() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("k.txt"), "# unit square on the bottom\n0,0\n1,0\n1,0.5\n0,0.5\n\n2,0\n2.5,0\n2.5,0.25\n").unwrap();
    let cfg = write_cfg(tmp.path(), "[task]\nkind = iso-check\nheights = 1\nslopes = 0, 0.25\npolygons = k.txt\nintervals = 0\n");
    let out = tmp.path().join("out");
    let o = threadwire(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = CsvDoc::parse(&std::fs::read_to_string(out.join("iso-check.csv")).unwrap()).unwrap();
    assert_eq!(doc.rows.len(), 2);
    assert_eq!(doc.get("polygons"), ["2", "2"]);
    for a in doc.floats("area") {
        assert!((a - 0.5625).abs() < 1e-12);
    }
    assert!(!out.join("iso-check_intervals.csv").exists());
}

#[test]
fn digest_tracks_results_not_presentation() {
    let base = "[task]\nkind = levelset\nfields = 4\n";
    let digest = |text: &str, over: Overrides| ExperimentConfig::parse(text, Path::new("."), &over).unwrap().digest;
    let d0 = digest(base, Overrides::default());
    assert_eq!(d0.len(), 64);
    assert_eq!(d0, digest(&format!("# comment\n{base}[output]\nname = other\n"), Overrides::default()));
    assert_eq!(d0, digest(base, Overrides { jobs: Some(3), ..Overrides::default() }));
    assert_ne!(d0, digest(base, Overrides { seed: Some(99), ..Overrides::default() }));
    assert_ne!(d0, digest("[task]\nkind = levelset\nfields = 5\n", Overrides::default()));
    assert_ne!(d0, digest(base, Overrides { tolerances: vec!["frame_tol=1e-7".into()], ..Overrides::default() }));
}

#[test]
fn same_seed_same_bytes_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "[task]\nkind = iso-check\nheights = 1\nslopes = 0.25\nfuzz = 500\nintervals = 2000\n");
    let read = |dir: &Path| {
        let mut v: Vec<_> = std::fs::read_dir(dir).unwrap().flatten().map(|e| (e.file_name(), std::fs::read(e.path()).unwrap())).collect();
        v.sort();
        v
    };
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    threadwire(&cfg, &a, &["--jobs", "1"]);
    threadwire(&cfg, &b, &["--jobs", "3"]);
    threadwire(&cfg, &c, &["--jobs", "3", "--seed", "1"]);
    assert_eq!(read(&a), read(&b));
    assert_eq!(read(&a).len(), 2);
    assert_ne!(read(&a), read(&c));
}
