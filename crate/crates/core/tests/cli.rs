use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use crowd_cluster::harness::CSV_HEADER;
use crowd_cluster::{Instance, SideInfoMatrix};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crowd-cluster")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("cfg.json");
    fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"algorithm":"baseline","n":50,"k":5,"seeds":{"count":10}}"#);
    let a = cli(&["run", &cfg]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = String::from_utf8(a.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 11);
    assert!(lines[1..].iter().all(|l| l.starts_with("baseline,50,5,0,") && l.split(',').nth(7) == Some("true")));

    let out = dir.path().join("out.csv");
    let b = cli(&["run", &cfg, "-o", out.to_str().unwrap()]);
    assert!(b.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), text);
}

#[test]
fn run_algorithm_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"algorithm":"baseline","n":40,"k":4,"seeds":[3]}"#);
    let o = cli(&["run", &cfg, "--algorithm", "rounds-noside"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "rounds-noside");
    assert_eq!(row[6], "4");
}

#[test]
fn invalid_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write_config(dir.path(), r#"{"algorithm":"alg2","n":50,"k":5,"oracle":{"mode":"faulty","p":0.6},"seeds":[1]}"#);
    let o = cli(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error rate p"));
    let cfg = write_config(dir.path(), r#"{"algorithm":"baseline","n":50,"k":5,"seeds":[1],"typo":1}"#);
    assert_eq!(cli(&["run", &cfg]).status.code(), Some(1));
}

#[test]
fn monte_carlo_misses_exit_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"algorithm":"alg1a-mc","n":300,"k":6,"side_info":{"preset":"example2","eps":0.2,"grid":2},"constants":{"desk_scale":0.001},"seeds":{"count":20}}"#,
    );
    let o = cli(&["run", &cfg]);
    let csv = String::from_utf8(o.stdout).unwrap();
    let inexact = csv.lines().skip(1).filter(|l| l.split(',').nth(7) == Some("false")).count();
    assert!(inexact > 0);
    assert!(o.status.success());
}

#[test]
fn infeasible_round_cap_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"algorithm":"rounds-side","n":60,"k":3,"side_info":{"preset":"pointmass"},"constants":{"round_cap":2},"seeds":[1]}"#,
    );
    let o = cli(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn bench_sweeps_and_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"algorithm":"alg2","n":100,"k":2,"oracle":{"mode":"faulty","p":0.1},"constants":{"desk_scale":0.2},"seeds":{"count":3},"sweep":{"p":[0.0,0.1]}}"#,
    );
    let out = dir.path().join("bench.csv");
    let summary = dir.path().join("summary.json");
    let o = cli(&["bench", &cfg, "-o", out.to_str().unwrap(), "--summary", summary.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 7);
    let groups: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(groups.as_array().unwrap().len(), 2);
    assert_eq!(groups[0]["p"], 0.0);
    assert_eq!(groups[0]["exact_rate"], 1.0);
    assert_eq!(groups[1]["runs"], 3);
}

#[test]
fn gen_writes_instance_and_side_info() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"algorithm":"alg1","n":30,"k":3,"side_info":{"preset":"example2","eps":0.3,"grid":4},"seeds":[11]}"#,
    );
    let out = dir.path().join("data");
    let o = cli(&["gen", &cfg, "--out", out.to_str().unwrap(), "--csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let inst: Instance = serde_json::from_str(&fs::read_to_string(out.join("instance-11.json")).unwrap()).unwrap();
    inst.validate().unwrap();
    assert_eq!((inst.n, inst.k, inst.seed), (30, 3, 11));
    let w = SideInfoMatrix::read_from(std::io::BufReader::new(fs::File::open(out.join("sideinfo-11.bin")).unwrap()))
        .unwrap();
    assert_eq!(w.n(), 30);
    let csv = fs::read_to_string(out.join("sideinfo-11.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 30 * 29 / 2);
    assert_eq!(csv.lines().nth(1).unwrap(), format!("0,1,{}", w.value(0, 1)));

    // same seed, same files
    let again = dir.path().join("again");
    assert!(cli(&["gen", &cfg, "--seed", "11", "--out", again.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(out.join("sideinfo-11.bin")).unwrap(), fs::read(again.join("sideinfo-11.bin")).unwrap());
    assert!(!again.join("sideinfo-11.csv").exists());
}

#[test]
fn bounds_prints_reference_values() {
    let o = cli(&[
        "bounds",
        "--n",
        "100",
        "--k",
        "5",
        "--p",
        "0.25",
        "--side-info",
        r#"{"preset":"bernoulli-grid","p_plus":0.8,"p_minus":0.2}"#,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let get = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("{key} missing in {text}"));
        line.rsplit(" = ").next().unwrap().parse().unwrap()
    };
    assert_eq!(get("nk"), 500.0);
    let d = 0.5 * 3f64.ln();
    assert!((get("D(p || 1-p)") - d).abs() < 1e-12);
    assert!((get("faulty") - 500.0 / d).abs() < 1e-9);
    let delta = 2.0 * 0.6 * 4f64.ln();
    assert!((get("Delta") - delta).abs() < 1e-12);
    assert!((get("perfect + side") - 25.0 / delta).abs() < 1e-9);
    assert!((get("las vegas") - 125.0).abs() < 1e-9);
    assert!((get("chernoff exponent") + (2.0 * (0.16f64).sqrt()).ln()).abs() < 1e-6);
}

#[test]
fn bounds_without_side_info() {
    let o = cli(&["bounds", "--n", "10", "--k", "2"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("faulty: nk / D(p || 1-p) = 20"));
    assert!(!text.contains("Delta"));
}
