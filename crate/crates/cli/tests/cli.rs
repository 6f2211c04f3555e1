use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn diffzoom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffzoom"))
        .args(args)
        .env_remove("DIFFZOOM_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(dir: &Path, name: &str) -> serde_json::Value {
    let text = fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn without_timing(mut v: serde_json::Value) -> serde_json::Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn missing_config_is_exit_2() {
    let o = diffzoom(&["zoom-sup", "--config", "/nonexistent/base.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error[CONFIG_NOT_FOUND]"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn unknown_keys_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = diffzoom(&["argmax", "--override", "pathz=10", "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[CONFIG_INVALID]"));

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "model = bm\nsigma = 1\n").unwrap();
    let o = diffzoom(&["argmax", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn resolution_violation_is_exit_2() {
    let o = diffzoom(&["zoom-sup", "--override", "eps=1e-4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("resolution"));
}

#[test]
fn reference_bessel3_table() {
    let o = diffzoom(&["reference", "--law", "bessel3", "--t", "1", "--xmax", "5", "--points", "500"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# schema=diffzoom.reference/1"));
    assert_eq!(lines.next().unwrap(), "x,cdf");
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (x, f) = l.split_once(',').unwrap();
            (x.parse().unwrap(), f.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 500);
    let nearest = rows.iter().min_by(|a, b| (a.0 - 1.0).abs().total_cmp(&(b.0 - 1.0).abs())).unwrap();
    assert!((nearest.1 - 0.1987).abs() < 2e-3, "{nearest:?}");
    assert!(rows.windows(2).all(|w| w[1].1 >= w[0].1));
}

#[test]
fn reference_unknown_law_is_exit_2() {
    let o = diffzoom(&["reference", "--law", "cauchy"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zoom_sup_with_config_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("base.cfg");
    fs::write(&cfg, "# quick run\nmodel = ou\ntheta = 1\ndt = 1e-5\npaths = 2000\n").unwrap();
    let out = dir.path().join("out");
    let o = diffzoom(&[
        "zoom-sup",
        "--config",
        cfg.to_str().unwrap(),
        "--override",
        "model=bm",
        "--override",
        "eps=1e-2",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out, "zoom_sup");
    assert_eq!(r["schema"], "diffzoom.report/1");
    assert_eq!(r["config"]["model"], "bm");
    assert_eq!(r["config"]["dt"], 1e-5);
    assert_eq!(r["passed"], true);
    assert!(r["timing"]["wall_seconds"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(out.join("zoom_sup_samples.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "# schema=diffzoom.samples/1");
    assert_eq!(lines.next().unwrap(), "path_id,epsilon,statistic_name,value");
}

#[test]
fn failed_check_is_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = diffzoom(&[
        "zoom-fixed",
        "--override",
        "model=bm_drift",
        "--override",
        "mu0=10",
        "--override",
        "dt=1e-3",
        "--override",
        "eps=0.1",
        "--override",
        "paths=500",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(report(dir.path(), "zoom_fixed")["passed"], false);
}

#[test]
fn reports_do_not_depend_on_threads() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = diffzoom(&[
            "argmax",
            "--override",
            "paths=500",
            "--override",
            "dt=1e-3",
            "--override",
            "arcsine_tol=1",
            "--override",
            "boundary_fraction=1",
            "--threads",
            threads,
            "--output-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        (
            report(dir.path(), "argmax"),
            fs::read_to_string(dir.path().join("argmax_samples.csv")).unwrap(),
        )
    };
    let (a, sa) = run("1");
    let (b, sb) = run("3");
    assert_eq!(a["timing"]["threads"], 1);
    assert_eq!(b["timing"]["threads"], 3);
    assert_eq!(without_timing(a), without_timing(b));
    assert_eq!(sa, sb);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    fs::write(&cfg, "seed = 5\npaths = 100\ndt = 1e-3\narcsine_tol = 1\nboundary_fraction = 1\n").unwrap();
    let run = |env: Option<&str>, extra: &[&str]| {
        let out = tempfile::tempdir().unwrap();
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_diffzoom"));
        cmd.args(["argmax", "--config", cfg.to_str().unwrap(), "--output-dir", out.path().to_str().unwrap()]);
        cmd.args(extra);
        cmd.env_remove("DIFFZOOM_SEED");
        if let Some(v) = env {
            cmd.env("DIFFZOOM_SEED", v);
        }
        assert!(cmd.output().unwrap().status.success());
        report(out.path(), "argmax")["config"]["seed"].as_u64().unwrap()
    };
    assert_eq!(run(None, &[]), 5);
    assert_eq!(run(Some("0x10"), &[]), 16);
    assert_eq!(run(Some("0x10"), &["--override", "seed=7"]), 7);
    assert_eq!(run(Some("0x10"), &["--override", "seed=7", "--seed", "9"]), 9);
}

#[test]
fn simulate_dumps_paths_and_scale_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = diffzoom(&["simulate", "--override", "model=ou", "--override", "theta=2", "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let path = fs::read_to_string(dir.path().join("path_00003.csv")).unwrap();
    assert!(path.starts_with("t,x\n0,0\n"));
    let table = fs::read_to_string(dir.path().join("scale_table.csv")).unwrap();
    assert!(table.starts_with("x,p,dp\n"));
}
