use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_opgrowth"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap()
}

fn ok(args: &[&str], config: &str, dir: &Path) -> PathBuf {
    let out = dir.join("out");
    let mut a: Vec<&str> = args.to_vec();
    let o = out.to_str().unwrap().to_string();
    a.extend(["--out", &o]);
    let r = run(&a, config, dir);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    out
}

fn table(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn checksums(out: &Path) -> Vec<(String, String)> {
    let m = json(&out.join("manifest.json"));
    m["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (a["file"].as_str().unwrap().to_string(), a["sha256"].as_str().unwrap().to_string()))
        .collect()
}

const HARMONIC: &str = "[model]\nkind = \"harmonic\"\ndim = 4\n";

#[test]
fn harmonic_spectrum() {
    let d = TempDir::new().unwrap();
    let out = ok(&["model"], HARMONIC, d.path());
    let rows = table(&out.join("spectrum.csv"));
    let e: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(e, vec![0.5, 1.5, 2.5, 3.5]);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["command"], "model");
    assert_eq!(m["artifacts"].as_array().unwrap().len(), 2);
}

#[test]
fn box_operator_entry() {
    let d = TempDir::new().unwrap();
    let out = ok(&["model"], "[model]\nkind = \"box1d\"\ndim = 3\nlength = 1.0\n", d.path());
    let rows = table(&out.join("operator.csv"));
    let first = rows.iter().find(|r| r[0] == "0" && r[1] == "1").unwrap();
    let v: f64 = first[2].parse().unwrap();
    assert!((v.abs() - 16.0 / (9.0 * PI * PI)).abs() < 1e-15);
    // (0, 2): equal parity
    assert!(!rows.iter().any(|r| r[0] == "0" && r[1] == "2"));
}

#[test]
fn outputs_are_deterministic() {
    let cfg = "seed = 3\n[model]\nkind = \"random\"\ndim = 300\nbandwidth = 20.0\ndecay = { law = \"exponential\", gamma = 0.5 }\n\
               [lanczos]\nn_max = 25\n";
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let oa = ok(&["lanczos"], cfg, a.path());
    let ob = ok(&["lanczos", "--jobs", "1"], cfg, b.path());
    assert_eq!(checksums(&oa), checksums(&ob));
    let c = TempDir::new().unwrap();
    let oc = ok(&["lanczos", "--seed", "4"], cfg, c.path());
    assert_ne!(checksums(&oa), checksums(&oc));
    assert_eq!(json(&oc.join("manifest.json"))["config"]["seed"], 4);
}

#[test]
fn manifest_reruns_to_identical_outputs() {
    let cfg = "seed = 5\n[model]\nkind = \"random\"\ndim = 200\nbandwidth = 20.0\ndecay = { law = \"flat\" }\n";
    let a = TempDir::new().unwrap();
    let oa = ok(&["lanczos"], cfg, a.path());
    let b = TempDir::new().unwrap();
    let ob = b.path().join("again");
    let r = Command::new(env!("CARGO_BIN_EXE_opgrowth"))
        .args(["lanczos", "--config"])
        .arg(oa.join("manifest.json"))
        .arg("--out")
        .arg(&ob)
        .output()
        .unwrap();
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(checksums(&oa), checksums(&ob));
}

#[test]
fn harmonic_lanczos_terminates() {
    let d = TempDir::new().unwrap();
    let out = ok(&["lanczos"], "[model]\nkind = \"harmonic\"\ndim = 30\nomega = 1.0\n", d.path());
    let rows = table(&out.join("lanczos.csv"));
    assert_eq!(rows, vec![vec!["1".to_string(), "1.0000000000000000e0".to_string()]]);
    let r = json(&out.join("growth_report.json"));
    assert_eq!(r["terminated_at"], 2);
    let m = json(&out.join("manifest.json"));
    assert!(m["notes"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("terminated at n = 2")));
}

#[test]
fn flat_ensemble_saturates() {
    let d = TempDir::new().unwrap();
    let cfg = "[model]\nkind = \"random\"\ndim = 1000\nbandwidth = 300.0\ndecay = { law = \"flat\" }\n[lanczos]\nn_max = 40\n";
    let out = ok(&["lanczos"], cfg, d.path());
    let r = json(&out.join("growth_report.json"));
    let s = r["saturation_ratio"].as_f64().unwrap();
    assert!((0.9..=1.1).contains(&s), "{r}");
    assert_eq!(r["decay_class"]["law"], "flat");
}

#[test]
fn two_site_dynamics() {
    let d = TempDir::new().unwrap();
    let cfg = "[model]\nkind = \"harmonic\"\ndim = 20\nomega = 1.5\n[dynamics]\nt_max = 4.0\nt_steps = 40\n";
    let out = ok(&["dynamics"], cfg, d.path());
    let ck = table(&out.join("complexity.csv"));
    let c = table(&out.join("correlation.csv"));
    assert_eq!(ck.len(), 41);
    assert_eq!(ck[0][1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(c[0][1].parse::<f64>().unwrap(), 1.0);
    for (k, cr) in ck.iter().zip(&c) {
        let t: f64 = k[0].parse().unwrap();
        assert!((k[1].parse::<f64>().unwrap() - (1.5 * t).sin().powi(2)).abs() < 1e-12);
        assert!((cr[1].parse::<f64>().unwrap() - (1.5 * t).cos()).abs() < 1e-12);
    }
    let m = json(&out.join("manifest.json"));
    assert!(m["warnings"].as_array().unwrap().is_empty(), "{m}");
    assert!(m["dynamics"]["max_norm_error"].as_f64().unwrap() < 1e-12);
}

#[test]
fn structure_recovers_gamma() {
    let d = TempDir::new().unwrap();
    let cfg = "[model]\nkind = \"random\"\ndim = 1500\nbandwidth = 30.0\ndecay = { law = \"exponential\", gamma = 0.5 }\n\
               [lanczos]\nn_max = 30\n";
    let out = ok(&["structure"], cfg, d.path());
    let r = json(&out.join("growth_report.json"));
    let law = &r["structure"]["classified"];
    assert_eq!(law["law"], "exponential", "{r}");
    let g = law["gamma"].as_f64().unwrap();
    assert!((g / 0.5 - 1.0).abs() < 0.1, "{g}");
    assert!(table(&out.join("structure_function.csv")).len() >= 10);
}

#[test]
fn absurd_window_fails() {
    let d = TempDir::new().unwrap();
    let cfg = "[model]\nkind = \"random\"\ndim = 200\nbandwidth = 20.0\ndecay = { law = \"flat\" }\n\
               [analysis.structure]\nwindow = [1000.0, 1001.0]\n";
    let r = run(&["structure", "--out", d.path().join("o").to_str().unwrap()], cfg, d.path());
    assert!(!r.status.success());
}

#[test]
fn unknown_keys_fail() {
    let d = TempDir::new().unwrap();
    let r = run(&["model"], "[model]\nkind = \"harmonic\"\ndim = 4\ndimm = 5\n", d.path());
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("dimm"));
    let r = run(&["model"], "[model]\nkind = \"xxz\"\nsites = 16\nj1 = 1.0\ndelta1 = 0.5\n", d.path());
    assert!(!r.status.success());
}

#[test]
fn sweep_is_job_count_independent() {
    let cfg = "[model]\nkind = \"box1d\"\ndim = 200\nlength = 10.0\n[lanczos]\nn_max = 30\n[sweep]\nbeta = [0.5, 1.0, 2.0]\n";
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let oa = ok(&["sweep", "--jobs", "1"], cfg, a.path());
    let ob = ok(&["sweep", "--jobs", "3"], cfg, b.path());
    assert_eq!(checksums(&oa), checksums(&ob));
    let rows = table(&oa.join("sweep.csv"));
    assert_eq!(rows.len(), 3);
    for r in rows {
        let beta: f64 = r[0].parse().unwrap();
        let alpha: f64 = r[4].parse().unwrap();
        assert!((alpha * beta / PI - 1.0).abs() < 0.1, "{r:?}");
    }
}

#[test]
fn extended_precision_flag() {
    let d = TempDir::new().unwrap();
    let out = ok(&["lanczos", "--precision", "extended"], HARMONIC, d.path());
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["lanczos"]["precision"], "extended");
}
