//! End-to-end runs of the `mfdim` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mfdim::measure::{from_ifs, read_measure_csv, IfsSpec};
use mfdim::RandomSource;
use rand::Rng;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn mfdim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfdim"))
        .args(args)
        .env_remove("MFDIM_SEED")
        .output()
        .expect("run mfdim")
}

fn ok(args: &[&str]) -> String {
    let out = mfdim(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SUITE: &str = r#"{"specs": [
  {"id": "TH2", "measure": {"source": "catalog", "name": "uniform_square", "depth": 5},
   "q": [2], "subspaces": 3, "tolerance": 0.3, "scales": {"type": "ladder", "from": 1, "to": 4}},
  {"id": "TH1", "measure": {"source": "catalog", "name": "binomial", "depth": 8},
   "q": [0.5], "m": 1, "subspaces": 2, "tolerance": 0.2}
]}"#;

#[test]
fn gen_writes_every_atom() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    ok(&["gen", "--ifs", s(&data("ifs/binomial.json")), "--depth", "12", "--out", s(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# tool=mfdim"));
    assert_eq!(lines.next().unwrap(), "x1,weight");
    assert_eq!(lines.count(), 4096);
}

#[test]
fn written_measure_matches_in_memory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let ifs = data("ifs/product_binomial.json");
    ok(&["gen", "--ifs", s(&ifs), "--depth", "6", "--out", s(&out)]);
    let back = read_measure_csv(&out).unwrap();
    let spec = IfsSpec::from_json(&std::fs::read_to_string(&ifs).unwrap()).unwrap();
    let mu = from_ifs(&spec, 6).unwrap();
    let mut g = RandomSource::new(11, 0).generator();
    for _ in 0..20 {
        let x = [g.random::<f64>(), g.random::<f64>()];
        let r = g.random::<f64>() * 0.3;
        assert!((back.ball_mass(&x, r) - mu.ball_mass(&x, r)).abs() <= 1e-12);
    }
}

#[test]
fn estimate_then_plot_is_decreasing() {
    let dir = tempfile::tempdir().unwrap();
    let est = dir.path().join("tau.csv");
    ok(&["estimate", "--catalog", "binomial", "--depth", "10", "--q", "-2:0.5:3", "--out", s(&est)]);
    ok(&["plot", s(&est)]);
    let svg = std::fs::read_to_string(est.with_extension("svg")).unwrap();
    let line = svg.lines().find(|l| l.contains("class=\"curve\"") && l.contains("ols")).expect("ols curve");
    let pts = line.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    let ys: Vec<f64> = pts.split_whitespace().map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ys.len(), 11);
    // SVG y grows downwards, so a decreasing τ has increasing y
    assert!(ys.windows(2).all(|w| w[1] > w[0]), "{ys:?}");
}

#[test]
fn check_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite.json");
    std::fs::write(&suite, SUITE).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = mfdim(&["--seed", "7", "check", s(&suite), "--out", s(&out)]);
        assert!(o.status.code() == Some(0) || o.status.code() == Some(1), "{}", String::from_utf8_lossy(&o.stderr));
        (String::from_utf8(o.stdout).unwrap(), std::fs::read(out).unwrap())
    };
    let (t1, a) = run("a.json");
    let (t2, b) = run("b.json");
    assert_eq!(t1, t2);
    assert_eq!(a, b);
    assert!(t1.contains("TH2") && t1.contains("TH1"));
}

#[test]
fn bad_configs_exit_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (SUITE.replace("\"tolerance\": 0.3", "\"tolerance\": -0.3"), "tolerance"),
        (SUITE.replace("\"subspaces\": 3", "\"subspaces\": 3, \"colour\": 1"), "colour"),
        (SUITE.replace("\"q\": [2]", "\"q\": [0.5]"), "q"),
    ];
    for (k, (text, key)) in cases.iter().enumerate() {
        let p = dir.path().join(format!("bad{k}.json"));
        std::fs::write(&p, text).unwrap();
        let o = mfdim(&["check", s(&p)]);
        assert_eq!(o.status.code(), Some(2));
        let err = String::from_utf8(o.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
        assert!(err.contains(key), "{err}");
    }
    let o = mfdim(&["estimate", "--catalog", "binomial", "--q", "1:0:2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("--q"));
    assert_eq!(mfdim(&["estimate", "--catalog", "nope", "--q", "1"]).status.code(), Some(2));
}

#[test]
fn seed_from_environment_lands_in_header() {
    let out = Command::new(env!("CARGO_BIN_EXE_mfdim"))
        .args(["gen", "--catalog", "binomial", "--depth", "3"])
        .env("MFDIM_SEED", "4242")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("seed=4242"), "{text}");
}

#[test]
fn energy_and_project() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    ok(&["project", "--catalog", "uniform_square", "--depth", "4", "--subspace", s(&data("subspace_2d.json")), "--out", s(&p)]);
    let back = read_measure_csv(&p).unwrap();
    assert_eq!(back.dim(), 1);
    assert!((back.total_mass() - 1.0).abs() < 1e-12);
    let e = ok(&["energy", "--measure", s(&p), "--s", "0.5,0.9"]);
    let rows: Vec<&str> = e.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "s,energy");
    assert_eq!(rows.len(), 3);
}
